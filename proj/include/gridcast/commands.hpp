#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gridcast {

// CLI entry points. Each returns a process exit code: 0 success, 1
// validation error, 2 runtime failure. All randomness flows from explicit
// seeds (flag > config > GRIDCAST_SEED env > 0) and reruns with identical
// inputs produce byte-identical outputs.

struct CommonArgs {
    std::optional<std::uint64_t> seed;  // --seed override
};

struct DatagenArgs : CommonArgs {
    std::string config_path;
    std::string out_dir;
};

struct TrainArgs : CommonArgs {
    std::string dataset_dir;
    std::string config_path;
    std::string out_dir;
    std::optional<int> n_models;  // --models override
};

struct PredictArgs : CommonArgs {
    std::string checkpoint_dir;
    std::string dataset_dir;
    std::string out_dir;
    std::string split = "test";  // train | test | all
    bool write_params = true;
};

struct FitTailArgs : CommonArgs {
    std::string quantiles_path;
    std::string config_path;
    std::string out_path;
    std::string summary_path;  // optional CSV with activation counts
};

struct VerifyArgs : CommonArgs {
    std::string forecast_path;
    std::string kind;  // quantiles | params | ensemble
    std::string family;  // for kind=params
    std::string dataset_dir;
    std::string split = "test";
    std::string out_dir;
    std::string thresholds = "0,5,10,20";
    double alpha = 0.05;
    int censor_border = 2;
};

struct ReportArgs : CommonArgs {
    std::string scores_path;      // crps.csv of the forecast
    std::string ref_scores_path;  // crps.csv of the reference
    std::string mask_path;        // grid file (1,h,w,1)
    std::string out_dir;
    int censor_border = 2;
};

int cmd_datagen(const DatagenArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_predict(const PredictArgs& args);
int cmd_fit_tail(const FitTailArgs& args);
int cmd_verify(const VerifyArgs& args);
int cmd_report(const ReportArgs& args);

std::uint64_t default_seed();  // GRIDCAST_SEED env or 0

}  // namespace gridcast
