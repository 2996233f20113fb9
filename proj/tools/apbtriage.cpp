// apbtriage: command line front end for dataset generation, cascade training,
// evaluation, and VCD diagnosis.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "apbtriage/apb.hpp"
#include "apbtriage/cascade.hpp"
#include "apbtriage/error.hpp"
#include "apbtriage/eval.hpp"
#include "apbtriage/faultgen.hpp"
#include "apbtriage/forest.hpp"
#include "apbtriage/vcd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace apbtriage;

namespace {

// ---------------------------------------------------------------- file io --

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::vector<std::uint8_t> read_binary_file(const fs::path& path) {
  std::string text = read_text_file(path);
  return {text.begin(), text.end()};
}

// write-to-temp then rename, so outputs are either absent or complete
void write_file_atomic(const fs::path& path, const void* data, std::size_t size) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw Error(ErrorCode::IoError, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot rename into '" + path.string() + "'");
  }
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

void write_file_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  write_file_atomic(path, bytes.data(), bytes.size());
}

std::string to_hex(std::uint32_t word) {
  char buf[11];
  std::snprintf(buf, sizeof(buf), "0x%08X", word);
  return buf;
}

std::uint32_t parse_word(const std::string& text) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(text, &used, 0);
    if (used != text.size() || v > 0xFFFFFFFFull) throw std::invalid_argument(text);
    return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadConfig, "bad address word '" + text + "'");
  }
}

faultgen::AddressMap address_map_from_file(const fs::path& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("ranges") ||
      !j["ranges"].is_array() || j["ranges"].empty())
    throw Error(ErrorCode::BadConfig,
                "address map file must hold {\"ranges\": [[base, last], ...]}");
  std::vector<faultgen::AddressRange> ranges;
  for (const json& r : j["ranges"]) {
    if (!r.is_array() || r.size() != 2)
      throw Error(ErrorCode::BadConfig, "address map range must be [base, last]");
    ranges.push_back({parse_word(r.at(0).get<std::string>()),
                      parse_word(r.at(1).get<std::string>())});
  }
  return faultgen::AddressMap(std::move(ranges));
}

apb::SignalMap signal_map_from_file(const fs::path& path) {
  return apb::signal_map_from_json(read_text_file(path));
}

// ----------------------------------------------------------------- gen ----

struct GenArgs {
  std::uint64_t seed = 42;
  std::uint64_t per_label = 0;
  std::vector<std::string> count_overrides;
  double read_fraction = 0.0;
  std::string address_map_path;
  std::string out_path;
  std::string vcd_dir;
  std::uint64_t vcd_period = 10;
  unsigned jobs = 0;
};

int run_gen(const GenArgs& args) {
  faultgen::GenSpec spec;
  spec.seed = args.seed;
  spec.read_fraction = args.read_fraction;
  if (!args.address_map_path.empty())
    spec.address_map = address_map_from_file(args.address_map_path);
  spec.count_per_label.fill(args.per_label);
  for (const std::string& override_text : args.count_overrides) {
    auto eq = override_text.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::BadConfig,
                  "--count expects label=N, got '" + override_text + "'");
    apb::Label label = apb::label_from_name(override_text.substr(0, eq));
    spec.count_per_label[static_cast<std::size_t>(label)] =
        std::stoull(override_text.substr(eq + 1));
  }
  if (spec.total_count() == 0)
    throw Error(ErrorCode::BadConfig, "no samples requested; use --per-label or --count");

  faultgen::Dataset ds = faultgen::generate_dataset(spec, args.jobs);

  std::ostringstream out;
  faultgen::write_dataset(ds, out);
  write_file_atomic(args.out_path, std::move(out).str());
  std::cerr << "wrote " << ds.samples.size() << " samples to " << args.out_path << "\n";

  if (!args.vcd_dir.empty()) {
    fs::path dir(args.vcd_dir);
    fs::create_directories(dir);
    apb::SignalMap map = apb::default_signal_map();
    write_file_atomic(dir / "signal_map.json", apb::signal_map_to_json(map));
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      std::vector<apb::Transaction> txns(ds.samples[i].txns.begin(),
                                         ds.samples[i].txns.end());
      for (std::size_t t = 0; t < txns.size(); ++t)
        txns[t].time = (2 * t + 1) * args.vcd_period;
      vcd::Document doc = apb::synth_waveform(txns, map, args.vcd_period);
      char name[32];
      std::snprintf(name, sizeof(name), "sample_%06zu.vcd", i);
      write_file_atomic(dir / name, vcd::emit(doc));
    }
    std::cerr << "wrote " << ds.samples.size() << " waveforms to " << args.vcd_dir
              << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- train ---

struct TrainArgs {
  std::string data_path;
  std::string out_path;
  std::string stage;
  std::uint64_t seed = 42;
  unsigned jobs = 0;
};

faultgen::Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return faultgen::read_dataset(in);
}

int run_train(const TrainArgs& args) {
  faultgen::Dataset ds = load_dataset(args.data_path);
  forest::Hyperparams hp;
  hp.base_seed = args.seed;
  if (args.stage.empty()) {
    cascade::CascadeModel model = cascade::train_cascade(ds, hp, args.jobs);
    write_file_atomic(args.out_path, cascade::save_cascade(model));
    std::cerr << "wrote cascade bundle to " << args.out_path << "\n";
  } else {
    forest::Task task = forest::task_from_name(args.stage);
    std::vector<forest::FeatureVector> x;
    std::vector<std::uint8_t> y;
    cascade::task_training_set(ds, task, x, y);
    forest::Forest model = forest::train_forest(x, y, hp, task, args.jobs);
    write_file_atomic(args.out_path, forest::save_forest(model));
    std::cerr << "wrote " << args.stage << " model to " << args.out_path << "\n";
  }
  return 0;
}

// ----------------------------------------------------------------- eval ---

struct EvalArgs {
  std::string data_path;
  std::string model_path;
  std::string report_path;
  unsigned cv = 0;
  std::uint64_t cv_seed = 42;
  unsigned jobs = 0;
};

const std::vector<std::string> kFineClasses = {
    "out_of_range_error", "address_error", "data_error_0", "data_error_1",
    "no_error"};
const std::vector<std::string> kMergedClasses = {
    "out_of_range_error", "address_error", "data_error", "no_error"};

void print_matrix(std::ostream& out, const eval::ConfusionMatrix& cm) {
  std::size_t width = 12;
  for (const std::string& c : cm.classes()) width = std::max(width, c.size() + 2);
  out << std::string(width, ' ') << "predicted\n";
  out << std::string(width, ' ');
  for (const std::string& c : cm.classes())
    out << std::setw(static_cast<int>(width)) << c;
  out << "\n";
  for (std::size_t i = 0; i < cm.classes().size(); ++i) {
    out << std::setw(static_cast<int>(width)) << cm.classes()[i];
    for (std::size_t j = 0; j < cm.classes().size(); ++j)
      out << std::setw(static_cast<int>(width)) << cm.count(i, j);
    out << "\n";
  }
}

int run_eval(const EvalArgs& args) {
  faultgen::Dataset ds = load_dataset(args.data_path);
  cascade::CascadeModel model = cascade::load_cascade(read_binary_file(args.model_path));

  json report;
  std::ostream& out = std::cout;

  // per-stage binary metrics on the task's subset of the dataset
  const forest::Task tasks[4] = {forest::Task::OutOfRange, forest::Task::AddressError,
                                 forest::Task::DataError0, forest::Task::DataError1};
  const forest::Forest* stage_models[4] = {&model.oor, &model.addr, &model.d0,
                                           &model.d1};
  for (int s = 0; s < 4; ++s) {
    std::vector<forest::FeatureVector> x;
    std::vector<std::uint8_t> y;
    cascade::task_training_set(ds, tasks[s], x, y);
    std::vector<double> scores(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      scores[i] = forest::predict_proba(*stage_models[s], x[i]);
    double auc = eval::roc_auc(scores, y);
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      bool fired = scores[i] >= stage_models[s]->decision_threshold;
      if (y[i] && fired) ++tp;
      else if (y[i]) ++fn;
      else if (fired) ++fp;
      else ++tn;
    }
    double acc = static_cast<double>(tp + tn) / static_cast<double>(x.size());
    std::string name(forest::task_name(tasks[s]));
    char line[160];
    std::snprintf(line, sizeof(line),
                  "stage %-4s  accuracy %.4f  AUC %.6f  TP %llu  FN %llu  FP %llu  TN %llu",
                  name.c_str(), acc, auc, static_cast<unsigned long long>(tp),
                  static_cast<unsigned long long>(fn), static_cast<unsigned long long>(fp),
                  static_cast<unsigned long long>(tn));
    out << line << "\n";
    json stage;
    stage["accuracy"] = acc;
    stage["auc"] = auc;
    stage["tp"] = tp;
    stage["fn"] = fn;
    stage["fp"] = fp;
    stage["tn"] = tn;
    report["stages"][name] = stage;
  }

  // end-to-end cascade over the full dataset
  std::vector<apb::Label> pred =
      cascade::diagnose_batch(model, ds.samples, args.jobs);
  std::vector<std::string> truth_fine, pred_fine, truth_merged, pred_merged;
  truth_fine.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!ds.samples[i].label)
      throw Error(ErrorCode::UnknownLabel, "eval dataset has unlabeled samples");
    truth_fine.emplace_back(apb::label_name(*ds.samples[i].label));
    pred_fine.emplace_back(apb::label_name(pred[i]));
    truth_merged.emplace_back(apb::merged_label_name(*ds.samples[i].label));
    pred_merged.emplace_back(apb::merged_label_name(pred[i]));
  }
  eval::ConfusionMatrix cm_fine =
      eval::confusion_matrix(truth_fine, pred_fine, kFineClasses);
  eval::ConfusionMatrix cm_merged =
      eval::confusion_matrix(truth_merged, pred_merged, kMergedClasses);
  eval::MetricsReport prf = eval::prf_metrics(cm_merged);

  out << "\ncascade confusion (fine labels):\n";
  print_matrix(out, cm_fine);
  out << "\ncascade confusion (data errors merged):\n";
  print_matrix(out, cm_merged);
  out << "\nclass                 precision(%)  recall(%)      f1(%)         tp\n";
  for (std::size_t c = 0; c < prf.classes.size(); ++c) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-22s %12.2f %10.2f %10.2f %10llu",
                  prf.classes[c].c_str(), prf.per_class[c].precision_pct,
                  prf.per_class[c].recall_pct, prf.per_class[c].f1_pct,
                  static_cast<unsigned long long>(prf.per_class[c].true_positives));
    out << line << "\n";
  }
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < kMergedClasses.size(); ++c) correct += cm_merged.count(c, c);
  char acc_line[128];
  std::snprintf(acc_line, sizeof(acc_line), "overall accuracy %.2f%% (%llu / %llu)",
                100.0 * prf.accuracy, static_cast<unsigned long long>(correct),
                static_cast<unsigned long long>(cm_merged.total()));
  out << "\n" << acc_line << "\n";

  auto matrix_json = [](const eval::ConfusionMatrix& cm) {
    json rows = json::array();
    for (std::size_t i = 0; i < cm.classes().size(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < cm.classes().size(); ++j) row.push_back(cm.count(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  report["cascade"]["classes_fine"] = kFineClasses;
  report["cascade"]["matrix_fine"] = matrix_json(cm_fine);
  report["cascade"]["classes_merged"] = kMergedClasses;
  report["cascade"]["matrix_merged"] = matrix_json(cm_merged);
  report["cascade"]["accuracy"] = prf.accuracy;
  report["cascade"]["correct"] = correct;
  report["cascade"]["total"] = cm_merged.total();
  json per_class = json::array();
  for (std::size_t c = 0; c < prf.classes.size(); ++c) {
    json cls;
    cls["class"] = prf.classes[c];
    cls["precision_pct"] = prf.per_class[c].precision_pct;
    cls["recall_pct"] = prf.per_class[c].recall_pct;
    cls["f1_pct"] = prf.per_class[c].f1_pct;
    cls["tp"] = prf.per_class[c].true_positives;
    per_class.push_back(std::move(cls));
  }
  report["cascade"]["per_class_merged"] = per_class;

  if (args.cv > 0) {
    out << "\n" << args.cv << "-fold cross-validation (dataset: " << args.data_path
        << "):\n";
    forest::Hyperparams hp;
    for (forest::Task task : tasks) {
      eval::CvResult cv = eval::kfold_cv(ds, args.cv, task, hp, args.cv_seed, args.jobs);
      std::string formatted = eval::format_mean_std(cv);
      out << "  " << forest::task_name(task) << ": " << formatted << "\n";
      json jcv;
      jcv["mean"] = cv.mean;
      jcv["stddev"] = cv.stddev;
      jcv["folds"] = cv.fold_accuracy;
      jcv["formatted"] = formatted;
      report["cv"][std::string(forest::task_name(task))] = jcv;
    }
  }

  if (!args.report_path.empty()) {
    write_file_atomic(args.report_path, report.dump(2) + "\n");
    std::cerr << "wrote report to " << args.report_path << "\n";
  }
  return 0;
}

// -------------------------------------------------------------- diagnose --

struct DiagnoseArgs {
  std::vector<std::string> vcd_paths;
  std::string vcd_dir;
  std::string map_path;
  std::string model_path;
  bool merge_data_errors = false;
  unsigned jobs = 0;
};

int run_diagnose(const DiagnoseArgs& args) {
  apb::SignalMap map = signal_map_from_file(args.map_path);
  cascade::CascadeModel model = cascade::load_cascade(read_binary_file(args.model_path));

  std::vector<fs::path> paths;
  for (const std::string& p : args.vcd_paths) paths.emplace_back(p);
  if (!args.vcd_dir.empty()) {
    for (const auto& entry : fs::directory_iterator(args.vcd_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".vcd")
        paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
  }
  if (paths.empty())
    throw Error(ErrorCode::BadConfig, "no VCD inputs; use --vcd or --vcd-dir");

  const bool prefix_names = paths.size() > 1;
  for (const fs::path& path : paths) {
    vcd::Document doc = vcd::parse(read_text_file(path));
    std::vector<apb::Transaction> txns = apb::extract_transactions(doc, map);
    apb::Grouping grouping = apb::group_samples(txns);
    if (grouping.remainder > 0)
      std::cerr << "warning: " << path.string() << ": " << grouping.remainder
                << " trailing transaction(s) short of a full "
                << apb::kTransactionsPerSample << "-transaction window\n";
    std::vector<apb::Label> labels =
        cascade::diagnose_batch(model, grouping.samples, args.jobs);
    for (std::size_t w = 0; w < labels.size(); ++w) {
      std::string_view name = args.merge_data_errors
                                  ? apb::merged_label_name(labels[w])
                                  : apb::label_name(labels[w]);
      if (prefix_names)
        std::cout << path.filename().string() << ": window " << w << ": " << name
                  << "\n";
      else
        std::cout << "window " << w << ": " << name << "\n";
    }
  }
  return 0;
}

// --------------------------------------------------------------- inspect --

int run_inspect(const std::string& vcd_path, const std::string& map_path) {
  apb::SignalMap map = signal_map_from_file(map_path);
  vcd::Document doc = vcd::parse(read_text_file(vcd_path));
  for (const apb::Transaction& txn : apb::extract_transactions(doc, map))
    std::cout << (txn.is_write ? "WRITE" : "READ") << " addr=" << to_hex(txn.address)
              << " data=" << to_hex(txn.data) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"APB transaction triage: VCD decoding, fault corpus generation, "
               "cascade training and diagnosis"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a labeled dataset");
  gen_cmd->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  gen_cmd->add_option("--per-label", gen.per_label, "sample count for every label");
  gen_cmd->add_option("--count", gen.count_overrides,
                      "per-label override, e.g. no_error=1000 (repeatable)");
  gen_cmd->add_option("--read-fraction", gen.read_fraction,
                      "probability a clean transaction is a read")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen_cmd->add_option("--address-map", gen.address_map_path,
                      "JSON file with valid address ranges");
  gen_cmd->add_option("--out", gen.out_path, "output dataset (JSON-Lines)")->required();
  gen_cmd->add_option("--vcd-dir", gen.vcd_dir,
                      "also write one VCD waveform per sample into this directory");
  gen_cmd->add_option("--vcd-period", gen.vcd_period, "simulation time per bus phase")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen_cmd->add_option("--jobs", gen.jobs, "worker threads (0 = all cores)")
      ->capture_default_str();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train the diagnosis cascade");
  train_cmd->add_option("--data", train.data_path, "training dataset (JSON-Lines)")
      ->required();
  train_cmd->add_option("--out", train.out_path, "output model file")->required();
  train_cmd->add_option("--stage", train.stage,
                        "train a single stage (oor|addr|d0|d1) instead of the bundle");
  train_cmd->add_option("--seed", train.seed, "forest base seed")->capture_default_str();
  train_cmd->add_option("--jobs", train.jobs, "worker threads (0 = all cores)")
      ->capture_default_str();

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a cascade bundle");
  eval_cmd->add_option("--data", eval_args.data_path, "labeled dataset")->required();
  eval_cmd->add_option("--model", eval_args.model_path, "cascade bundle")->required();
  eval_cmd->add_option("--report", eval_args.report_path, "write a JSON report here");
  eval_cmd->add_option("--cv", eval_args.cv, "also run k-fold cross-validation");
  eval_cmd->add_option("--cv-seed", eval_args.cv_seed, "fold assignment seed")
      ->capture_default_str();
  eval_cmd->add_option("--jobs", eval_args.jobs, "worker threads (0 = all cores)")
      ->capture_default_str();

  DiagnoseArgs diag;
  CLI::App* diag_cmd = app.add_subcommand("diagnose", "diagnose VCD waveforms");
  diag_cmd->add_option("--vcd", diag.vcd_paths, "VCD file (repeatable)");
  diag_cmd->add_option("--vcd-dir", diag.vcd_dir, "diagnose every *.vcd in a directory");
  diag_cmd->add_option("--map", diag.map_path, "signal map JSON")->required();
  diag_cmd->add_option("--model", diag.model_path, "cascade bundle")->required();
  diag_cmd->add_flag("--merge-data-errors", diag.merge_data_errors,
                     "report data_error_0/1 as data_error");
  diag_cmd->add_option("--jobs", diag.jobs, "worker threads (0 = all cores)")
      ->capture_default_str();

  std::string inspect_vcd, inspect_map;
  CLI::App* inspect_cmd =
      app.add_subcommand("inspect", "list decoded APB transactions");
  inspect_cmd->add_option("--vcd", inspect_vcd, "VCD file")->required();
  inspect_cmd->add_option("--map", inspect_map, "signal map JSON")->required();

  try {
    app.parse(argc, argv);
    if (gen_cmd->parsed()) return run_gen(gen);
    if (train_cmd->parsed()) return run_train(train);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (diag_cmd->parsed()) return run_diagnose(diag);
    if (inspect_cmd->parsed()) return run_inspect(inspect_vcd, inspect_map);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 10 + static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
