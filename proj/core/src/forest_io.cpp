#include "apbtriage/forest.hpp"

#include "binio.hpp"

namespace apbtriage::forest {

namespace {

constexpr std::string_view kForestMagic = "APBF";
constexpr std::uint32_t kForestFormatVersion = 1;

}  // namespace

std::vector<std::uint8_t> save_forest(const Forest& f) {
  detail::ByteWriter w;
  w.magic(kForestMagic);
  w.u32(kForestFormatVersion);
  w.u8(static_cast<std::uint8_t>(f.task));
  w.f64(f.decision_threshold);
  w.u32(f.input_width);
  w.u32(f.split_width);
  w.u32(f.hyperparams.tree_count);
  w.u32(f.hyperparams.max_depth);
  w.u32(f.hyperparams.min_samples_split);
  w.u32(f.hyperparams.min_samples_leaf);
  w.u32(f.hyperparams.features_per_split);
  w.u8(f.hyperparams.balanced_class_weights ? 1 : 0);
  w.u64(f.hyperparams.base_seed);
  w.u32(static_cast<std::uint32_t>(f.trees.size()));
  for (const Tree& tree : f.trees) {
    w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
    for (const TreeNode& node : tree.nodes) {
      w.i32(node.feature);
      w.f64(node.threshold);
      w.i32(node.left);
      w.i32(node.right);
      w.f64(node.leaf_value);
    }
  }
  w.append_crc();
  return w.take();
}

Forest load_forest(std::span<const std::uint8_t> bytes) {
  // magic and version first so a version bump reports as such, then the crc
  detail::ByteReader head(bytes);
  if (!head.expect_magic(kForestMagic))
    throw Error(ErrorCode::CorruptModel, "not a forest model file");
  std::uint32_t version = head.u32();
  if (version != kForestFormatVersion)
    throw Error(ErrorCode::VersionMismatch,
                "forest format version " + std::to_string(version) + ", expected " +
                    std::to_string(kForestFormatVersion));

  detail::ByteReader r(detail::checked_payload(bytes, "forest model"));
  r.expect_magic(kForestMagic);
  r.u32();  // version, already checked

  Forest f;
  std::uint8_t task = r.u8();
  if (task > static_cast<std::uint8_t>(Task::DataError1))
    throw Error(ErrorCode::CorruptModel, "invalid task tag");
  f.task = static_cast<Task>(task);
  f.decision_threshold = r.f64();
  f.input_width = r.u32();
  f.split_width = r.u32();
  f.hyperparams.tree_count = r.u32();
  f.hyperparams.max_depth = r.u32();
  f.hyperparams.min_samples_split = r.u32();
  f.hyperparams.min_samples_leaf = r.u32();
  f.hyperparams.features_per_split = r.u32();
  f.hyperparams.balanced_class_weights = r.u8() != 0;
  f.hyperparams.base_seed = r.u64();
  std::uint32_t tree_count = r.u32();
  if (tree_count != f.hyperparams.tree_count)
    throw Error(ErrorCode::CorruptModel, "tree count does not match hyperparameters");
  f.trees.resize(tree_count);
  for (Tree& tree : f.trees) {
    std::uint32_t node_count = r.u32();
    if (node_count == 0)
      throw Error(ErrorCode::CorruptModel, "empty tree");
    tree.nodes.resize(node_count);
    for (TreeNode& node : tree.nodes) {
      node.feature = r.i32();
      node.threshold = r.f64();
      node.left = r.i32();
      node.right = r.i32();
      node.leaf_value = r.f64();
      if (node.feature >= 0) {
        bool in_range = node.feature < static_cast<std::int32_t>(f.split_width) &&
                        node.left > 0 && node.right > 0 &&
                        node.left < static_cast<std::int32_t>(node_count) &&
                        node.right < static_cast<std::int32_t>(node_count);
        if (!in_range)
          throw Error(ErrorCode::CorruptModel, "tree node out of range");
      }
    }
  }
  if (r.remaining() != 0)
    throw Error(ErrorCode::CorruptModel, "trailing bytes in forest model");
  return f;
}

}  // namespace apbtriage::forest
