#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gatenet/cli/config.hpp"
#include "gatenet/gradcheck.hpp"
#include "gatenet/metrics.hpp"
#include "gatenet/trainer.hpp"

namespace gatenet::cli {

// Exit codes shared by every verb.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

// Output file names inside the run directory.
inline constexpr const char* kReportFile = "report.csv";
inline constexpr const char* kTimingFile = "timing.csv";
inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kVocabFile = "vocab.tsv";
inline constexpr const char* kTestFile = "test.tsv";
inline constexpr const char* kConfigFile = "config.ini";
inline constexpr const char* kEvalFile = "eval.csv";
inline constexpr const char* kPredictFile = "predictions.csv";
inline constexpr const char* kAblationCsv = "ablation.csv";
inline constexpr const char* kAblationTable = "ablation.txt";

// Encoded train/test splits plus what is needed to persist them.
struct PreparedData {
  FieldSchema schema;
  Vocabulary vocab;
  Dataset train;
  Dataset test;
  std::vector<RawRow> test_rows;  // raw text of the test split
};

PreparedData prepare_data(const DataConfig& config);

// Trains per config and writes report.csv, vocab.tsv, model.ckpt, test.tsv
// and config.ini into out_dir.
TrainReport cmd_train(const RunConfig& config, const std::string& out_dir, std::ostream& log);

struct EvalRequest {
  std::string checkpoint;
  std::string data;
  std::string vocab;  // defaults to vocab.tsv beside the checkpoint
  char delimiter = '\t';
  std::string out_dir;  // eval.csv is written here when nonempty
};

// Prints `auc,logloss,n_pos,n_neg` and one value row.
EvalResult cmd_eval(const EvalRequest& request, std::ostream& out);
// Writes one probability per input row to predictions.csv (or `out`).
std::vector<double> cmd_predict(const EvalRequest& request, std::ostream& out);

// The four embedding gate modes: private/shared x vector/bit.
std::vector<GateConfig> all_gate_modes();

// FM_e, DNN_e and DeepFM_e+h in every gate mode, plus DNN_h; tiny sizes.
std::vector<ModelSpec> default_gradcheck_specs();

struct GradcheckRequest {
  std::vector<ModelSpec> specs = default_gradcheck_specs();
  std::uint64_t seed = 1;
  gradcheck::CheckOptions options;
};

struct GradcheckCase {
  std::string label;
  gradcheck::GradReport report;
};

// Runs every requested case and prints one table per case.
std::vector<GradcheckCase> cmd_gradcheck(const GradcheckRequest& request, std::ostream& out);

struct AblationTable {
  std::string axis;
  std::string title;
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  // mean_auc[row][column]
  std::vector<std::vector<double>> mean_auc;
  std::vector<std::vector<double>> mean_logloss;
  std::vector<std::vector<std::vector<double>>> seed_auc;

  std::string render() const;
};

// One table per configured axis; writes ablation.csv and ablation.txt.
std::vector<AblationTable> cmd_ablate(const RunConfig& config, const std::string& out_dir,
                                      std::ostream& log);

// Dispatches argv to the verbs and maps errors to exit codes.
int run(int argc, char** argv);

}  // namespace gatenet::cli
