#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "gridcast/commands.hpp"

using namespace gridcast;

int main(int argc, char** argv) {
    CLI::App app{"gridcast: distributional postprocessing of gridded ensemble precipitation "
                 "forecasts, with synthetic data generation and verification"};
    app.require_subcommand(1);

    // precedence: --seed flag > config file > GRIDCAST_SEED env > 0
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override every config-provided seed");

    DatagenArgs dg;
    auto* c_dg = app.add_subcommand("datagen", "generate a synthetic gridded dataset");
    c_dg->add_option("--config", dg.config_path, "experiment config file")->required();
    c_dg->add_option("--out", dg.out_dir, "output dataset directory")->required();

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("train", "train an ensemble of U-Net models");
    c_tr->add_option("--dataset", tr.dataset_dir, "dataset directory (with manifest.txt)")
        ->required();
    c_tr->add_option("--config", tr.config_path, "experiment config file")->required();
    c_tr->add_option("--out", tr.out_dir, "checkpoint output directory")->required();
    std::optional<int> models_override;
    c_tr->add_option("--models", models_override, "override [training] n_models");

    PredictArgs pr;
    auto* c_pr = app.add_subcommand("predict", "predict parameter fields and aggregated quantiles");
    c_pr->add_option("--checkpoints", pr.checkpoint_dir, "directory with model_*.ckpt")->required();
    c_pr->add_option("--dataset", pr.dataset_dir, "dataset directory")->required();
    c_pr->add_option("--out", pr.out_dir, "output directory")->required();
    c_pr->add_option("--split", pr.split, "train|test|all (default test)");
    c_pr->add_flag("--no-params,!--params", pr.write_params,
                   "skip the per-model parameter grids");

    FitTailArgs ft;
    auto* c_ft = app.add_subcommand("fit-tail", "apply the parametric tail extension to quantiles");
    c_ft->add_option("--quantiles", ft.quantiles_path, "quantile forecast grid")->required();
    c_ft->add_option("--config", ft.config_path, "experiment config file ([tail] section)")
        ->required();
    c_ft->add_option("--out", ft.out_path, "output quantile grid")->required();
    c_ft->add_option("--summary", ft.summary_path, "optional activation summary CSV");

    VerifyArgs vf;
    auto* c_vf = app.add_subcommand("verify", "score a forecast against observations");
    c_vf->add_option("--forecast", vf.forecast_path, "forecast grid file")->required();
    c_vf->add_option("--kind", vf.kind, "quantiles|params|ensemble")->required();
    c_vf->add_option("--family", vf.family, "distribution family for kind=params");
    c_vf->add_option("--dataset", vf.dataset_dir, "dataset directory (obs, mask, split)")
        ->required();
    c_vf->add_option("--split", vf.split, "train|test|all (default test)");
    c_vf->add_option("--out", vf.out_dir, "report output directory")->required();
    c_vf->add_option("--thresholds", vf.thresholds, "comma list for ROC (default 0,5,10,20)");
    c_vf->add_option("--alpha", vf.alpha, "flatness test level (default 0.05)");
    c_vf->add_option("--censor-border", vf.censor_border,
                     "border width excluded by the censor mask (default 2)");

    ReportArgs rp;
    auto* c_rp = app.add_subcommand("report", "skill of one score map against another");
    c_rp->add_option("--scores", rp.scores_path, "forecast crps.csv")->required();
    c_rp->add_option("--ref", rp.ref_scores_path, "reference crps.csv")->required();
    c_rp->add_option("--mask", rp.mask_path, "land mask grid file")->required();
    c_rp->add_option("--out", rp.out_dir, "output directory")->required();
    c_rp->add_option("--censor-border", rp.censor_border, "censor border width (default 2)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: validation: " << e.what() << "\n";
        return 1;
    }

    dg.seed = tr.seed = pr.seed = ft.seed = vf.seed = rp.seed = seed;
    tr.n_models = models_override;

    if (c_dg->parsed()) return cmd_datagen(dg);
    if (c_tr->parsed()) return cmd_train(tr);
    if (c_pr->parsed()) return cmd_predict(pr);
    if (c_ft->parsed()) return cmd_fit_tail(ft);
    if (c_vf->parsed()) return cmd_verify(vf);
    if (c_rp->parsed()) return cmd_report(rp);
    std::cerr << "error: validation: no subcommand\n";
    return 1;
}
