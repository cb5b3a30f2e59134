#include "gridcast/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gridcast/config.hpp"
#include "gridcast/datagen.hpp"
#include "gridcast/dataio.hpp"
#include "gridcast/fitting.hpp"
#include "gridcast/gridnet.hpp"
#include "gridcast/scoring.hpp"
#include "gridcast/train.hpp"
#include "gridcast/util.hpp"
#include "gridcast/verification.hpp"

namespace fs = std::filesystem;

namespace gridcast {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("GRIDCAST_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw std::runtime_error("GRIDCAST_SEED is not an unsigned integer");
        }
    }
    return 0;
}

namespace {

int run_guarded(const char* name, const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const std::domain_error& e) {
        std::cerr << "error: validation: " << name << ": " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: validation: " << name << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        // config/file problems arrive as runtime_error; classify missing
        // input and schema errors as validation
        const std::string what = e.what();
        const bool validation = what.find("cannot open") != std::string::npos ||
                                what.find("missing") != std::string::npos ||
                                what.find("unknown") != std::string::npos ||
                                what.find(": value of") != std::string::npos ||
                                what.find("expected") != std::string::npos;
        std::cerr << "error: " << (validation ? "validation" : "runtime") << ": " << name << ": "
                  << what << "\n";
        return validation ? 1 : 2;
    }
}

SyntheticConfig dataset_config_from(const Config& cfg, std::optional<std::uint64_t> seed_override) {
    cfg.require_known_keys(
        "dataset", {"name", "height", "width", "n_variables", "n_constants", "n_days", "family",
                    "ensemble_size", "bias", "dispersion_factor", "length_scale",
                    "train_fraction", "seed"});
    SyntheticConfig sc;
    sc.height = static_cast<int>(cfg.get_int("dataset", "height", 32));
    sc.width = static_cast<int>(cfg.get_int("dataset", "width", 32));
    sc.n_variables = static_cast<int>(cfg.get_int("dataset", "n_variables", 1));
    sc.n_constants = static_cast<int>(cfg.get_int("dataset", "n_constants", 1));
    sc.n_days = static_cast<int>(cfg.get_int("dataset", "n_days", 128));
    sc.family = family_from_name(cfg.get_string("dataset", "family", "gtcnd"));
    sc.ensemble_size = static_cast<int>(cfg.get_int("dataset", "ensemble_size", 17));
    sc.bias = cfg.get_double("dataset", "bias", 0.0);
    sc.dispersion_factor = cfg.get_double("dataset", "dispersion_factor", 1.0);
    sc.length_scale = cfg.get_double("dataset", "length_scale", 5.0);
    sc.train_fraction = cfg.get_double("dataset", "train_fraction", 0.8);
    sc.seed = seed_override ? *seed_override : cfg.get_seed("dataset", "seed", default_seed());
    sc.validate();
    return sc;
}

struct LoadedDataset {
    Manifest manifest;
    Tensor4 predictors, observations, ensemble, constants, mask;
    std::vector<int> train_days, test_days;
};

LoadedDataset load_dataset(const std::string& dir) {
    LoadedDataset d;
    d.manifest = read_manifest((fs::path(dir) / "manifest.txt").string());
    d.manifest.validate_against_dir(dir);
    auto path_of = [&](const std::string& role) {
        const auto it = d.manifest.files.find(role);
        if (it == d.manifest.files.end())
            throw std::runtime_error("manifest: missing role '" + role + "'");
        return (fs::path(dir) / it->second).string();
    };
    d.predictors = read_grid(path_of("predictors"));
    d.observations = read_grid(path_of("observations"));
    d.ensemble = read_grid(path_of("ensemble"));
    d.constants = read_grid(path_of("constants"));
    d.mask = read_grid(path_of("mask"));
    d.train_days.resize(d.manifest.train_end);
    std::iota(d.train_days.begin(), d.train_days.end(), 0);
    d.test_days.resize(d.manifest.n_days - d.manifest.train_end);
    std::iota(d.test_days.begin(), d.test_days.end(), d.manifest.train_end);
    return d;
}

std::vector<int> split_days(const LoadedDataset& d, const std::string& split) {
    if (split == "train") return d.train_days;
    if (split == "test") return d.test_days;
    if (split == "all") {
        std::vector<int> all(d.manifest.n_days);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    throw std::domain_error("unknown split '" + split + "' (expected train|test|all)");
}

std::string format_threshold(double t) {
    std::ostringstream s;
    s << t;
    std::string r = s.str();
    for (char& ch : r)
        if (ch == '.') ch = 'p';
    return r;
}

}  // namespace

// ----------------------------------------------------------- datagen

int cmd_datagen(const DatagenArgs& args) {
    return run_guarded("datagen", [&] {
        const Config cfg = Config::parse_file(args.config_path);
        const SyntheticConfig sc = dataset_config_from(cfg, args.seed);
        const SyntheticDataset ds = build_dataset(sc);

        fs::create_directories(args.out_dir);
        write_grid((fs::path(args.out_dir) / "predictors.gpt").string(), ds.predictors);
        write_grid((fs::path(args.out_dir) / "observations.gpt").string(), ds.observations);
        write_grid((fs::path(args.out_dir) / "truth_params.gpt").string(), ds.truth_params);
        write_grid((fs::path(args.out_dir) / "ensemble.gpt").string(), ds.ensemble);
        write_grid((fs::path(args.out_dir) / "constants.gpt").string(), ds.constants);

        Tensor4 mask(1, sc.height, sc.width, 1);
        mask.channel_names = {"land_sea_mask"};
        for (int y = 0; y < sc.height; ++y)
            for (int x = 0; x < sc.width; ++x) mask.at(0, y, x, 0) = ds.constants.at(0, y, x, 1);
        write_grid((fs::path(args.out_dir) / "mask.gpt").string(), mask);

        Manifest m;
        m.name = cfg.get_string("dataset", "name", "synthetic");
        m.family = family_name(sc.family);
        m.config_hash = fnv1a_hash(cfg.canonical_text());
        m.n_days = sc.n_days;
        m.train_end = sc.train_days();
        m.files = {{"predictors", "predictors.gpt"}, {"observations", "observations.gpt"},
                   {"truth", "truth_params.gpt"},    {"ensemble", "ensemble.gpt"},
                   {"constants", "constants.gpt"},   {"mask", "mask.gpt"}};
        write_manifest((fs::path(args.out_dir) / "manifest.txt").string(), m);
    });
}

// ------------------------------------------------------------- train

int cmd_train(const TrainArgs& args) {
    return run_guarded("train", [&] {
        const Config cfg = Config::parse_file(args.config_path);
        cfg.require_known_keys("training",
                               {"learning_rate", "batch_size", "epochs", "n_models",
                                "base_channels", "use_separable", "clip_norm", "seed", "family"});
        const LoadedDataset ds = load_dataset(args.dataset_dir);

        TrainConfig tc;
        tc.learning_rate = cfg.get_double("training", "learning_rate", 1e-3);
        tc.batch_size = static_cast<int>(cfg.get_int("training", "batch_size", 8));
        tc.epochs = static_cast<int>(cfg.get_int("training", "epochs", 50));
        tc.clip_norm = cfg.get_double("training", "clip_norm", 0.0);
        tc.n_models = static_cast<int>(cfg.get_int("training", "n_models", 10));
        tc.seed = args.seed ? *args.seed : cfg.get_seed("training", "seed", default_seed());
        if (args.n_models) tc.n_models = *args.n_models;
        tc.validate();

        UNetConfig uc;
        uc.base_channels = static_cast<int>(cfg.get_int("training", "base_channels", 8));
        uc.use_separable = cfg.get_bool("training", "use_separable", true);
        uc.family = family_from_name(
            cfg.get_string("training", "family", ds.manifest.family));
        uc.in_channels = ds.predictors.c;

        fs::create_directories(args.out_dir);

        std::vector<TrainResult> results(tc.n_models);
        std::vector<std::string> ckpt_paths(tc.n_models);
        std::vector<int> diverged_flags(tc.n_models, 0);
        parallel_for(static_cast<std::size_t>(tc.n_models), [&](std::size_t k) {
            UNetConfig uck = uc;
            uck.seed = derive_seed(tc.seed, k);
            UNet model(uck);
            TrainConfig tck = tc;
            tck.seed = derive_seed(tc.seed, 0x1000 + k);
            results[k] = train(model, ds.predictors, ds.observations, ds.train_days, tck);
            diverged_flags[k] = results[k].diverged ? 1 : 0;
            std::ostringstream name;
            name << "model_" << (k < 10 ? "0" : "") << k << ".ckpt";
            ckpt_paths[k] = (fs::path(args.out_dir) / name.str()).string();
            write_checkpoint(ckpt_paths[k], model);
        });

        Report log;
        log.columns = {"model", "epoch", "train_loss", "val_loss", "best_epoch", "diverged"};
        for (int k = 0; k < tc.n_models; ++k) {
            const TrainResult& r = results[k];
            for (std::size_t e = 0; e < r.train_loss.size(); ++e)
                log.add_row({static_cast<std::int64_t>(k), static_cast<std::int64_t>(e),
                             r.train_loss[e], r.val_loss[e],
                             static_cast<std::int64_t>(r.best_epoch),
                             static_cast<std::int64_t>(r.diverged ? 1 : 0)});
        }
        write_report((fs::path(args.out_dir) / "training_log.csv").string(), log);

        for (int k = 0; k < tc.n_models; ++k)
            if (diverged_flags[k])
                throw std::runtime_error("model " + std::to_string(k) + " diverged: " +
                                         results[k].divergence_note);
    });
}

// ----------------------------------------------------------- predict

int cmd_predict(const PredictArgs& args) {
    return run_guarded("predict", [&] {
        const LoadedDataset ds = load_dataset(args.dataset_dir);
        const std::vector<int> days = split_days(ds, args.split);
        const Tensor4 inputs = gather_batch(ds.predictors, days);

        std::vector<std::string> ckpts;
        for (const auto& entry : fs::directory_iterator(args.checkpoint_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.starts_with("model_") && name.ends_with(".ckpt"))
                ckpts.push_back(entry.path().string());
        }
        std::sort(ckpts.begin(), ckpts.end());
        if (ckpts.empty())
            throw std::runtime_error("no model_*.ckpt files in " + args.checkpoint_dir);

        std::vector<UNet> models;
        models.reserve(ckpts.size());
        for (const auto& p : ckpts) models.push_back(read_checkpoint(p));

        fs::create_directories(args.out_dir);
        if (args.write_params) {
            for (std::size_t k = 0; k < models.size(); ++k) {
                const Tensor4 params = predict_params(models[k], inputs);
                std::ostringstream name;
                name << "params_m" << (k < 10 ? "0" : "") << k << ".gpt";
                write_grid((fs::path(args.out_dir) / name.str()).string(), params);
            }
        }
        std::vector<UNet*> model_ptrs;
        for (auto& m : models) model_ptrs.push_back(&m);
        const Tensor4 quantiles =
            aggregate_quantiles(model_ptrs, inputs, QuantileForecast::default_levels());
        write_grid((fs::path(args.out_dir) / "quantiles.gpt").string(), quantiles);
    });
}

// ---------------------------------------------------------- fit-tail

int cmd_fit_tail(const FitTailArgs& args) {
    return run_guarded("fit-tail", [&] {
        const Config cfg = Config::parse_file(args.config_path);
        cfg.require_known_keys(
            "tail", {"family", "activation_threshold", "activation_prob", "update_levels"});
        TailConfig tc;
        tc.family = family_from_name(cfg.get_string("tail", "family", "gtcnd"));
        tc.activation_threshold = cfg.get_double("tail", "activation_threshold", 5.0);
        tc.activation_prob = cfg.get_double("tail", "activation_prob", 0.05);
        const std::string levels_text = cfg.get_string("tail", "update_levels", "top10");

        const Tensor4 q = read_grid(args.quantiles_path);
        if (levels_text.starts_with("top")) {
            tc.update_levels =
                top_levels(q.c, static_cast<std::size_t>(std::stoul(levels_text.substr(3))));
        } else {
            for (double v : parse_double_list(levels_text))
                tc.update_levels.push_back(static_cast<std::size_t>(v));
        }

        const auto levels = QuantileForecast::default_levels();
        if (q.c != static_cast<int>(levels->size()))
            throw std::runtime_error("fit-tail: expected " + std::to_string(levels->size()) +
                                     " quantile channels, got " + std::to_string(q.c));

        Tensor4 out = q;
        std::vector<std::uint64_t> activated(q.n, 0), failed(q.n, 0);
        parallel_for(static_cast<std::size_t>(q.n), [&](std::size_t day) {
            for (int y = 0; y < q.h; ++y)
                for (int x = 0; x < q.w; ++x) {
                    const auto src = q.point(static_cast<int>(day), y, x);
                    QuantileForecast qf(levels, std::vector<double>(src.begin(), src.end()));
                    const TailExtendResult r = tail_extend(qf, tc);
                    if (r.activated) activated[day] += 1;
                    if (r.fit_failed) failed[day] += 1;
                    auto dst = out.point(static_cast<int>(day), y, x);
                    std::copy(r.forecast.values().begin(), r.forecast.values().end(),
                              dst.begin());
                }
        });
        write_grid(args.out_path, out);

        if (!args.summary_path.empty()) {
            Report rep;
            rep.columns = {"day", "activated_points", "fit_failures"};
            for (int d = 0; d < q.n; ++d)
                rep.add_row({static_cast<std::int64_t>(d),
                             static_cast<std::int64_t>(activated[d]),
                             static_cast<std::int64_t>(failed[d])});
            write_report(args.summary_path, rep);
        }
    });
}

// ------------------------------------------------------------ verify

namespace {

struct ForecastScores {
    Tensor4 crps_map;                 // (1,h,w,1) mean over days
    std::vector<RankHistogram> per_point;  // h*w histograms
    RankHistogram pooled;
    std::vector<double> exceed_probs;      // per threshold: days*h*w probabilities
};

}  // namespace

int cmd_verify(const VerifyArgs& args) {
    return run_guarded("verify", [&] {
        if (!(args.alpha > 0.0 && args.alpha < 1.0))
            throw std::domain_error("alpha must be in (0,1)");
        const LoadedDataset ds = load_dataset(args.dataset_dir);
        const std::vector<int> days = split_days(ds, args.split);
        const Tensor4 obs = gather_batch(ds.observations, days);
        const std::vector<double> thresholds = parse_double_list(args.thresholds);
        const std::uint64_t seed = args.seed ? *args.seed : default_seed();

        const Tensor4 fc = read_grid(args.forecast_path);
        if (fc.h != obs.h || fc.w != obs.w)
            throw std::runtime_error("verify: forecast grid dims do not match observations");
        if (fc.n != obs.n)
            throw std::runtime_error(
                "verify: forecast day count does not match the requested split (" +
                std::to_string(fc.n) + " vs " + std::to_string(obs.n) + ")");

        const auto levels = QuantileForecast::default_levels();
        const int H = fc.h, W = fc.w;
        const std::size_t n_points = static_cast<std::size_t>(H) * W;

        enum class Kind { quantiles, params, ensemble };
        Kind kind;
        if (args.kind == "quantiles") kind = Kind::quantiles;
        else if (args.kind == "params") kind = Kind::params;
        else if (args.kind == "ensemble") kind = Kind::ensemble;
        else throw std::domain_error("unknown forecast kind '" + args.kind + "'");

        std::optional<Family> family;
        if (kind == Kind::params) {
            if (args.family.empty())
                throw std::domain_error("kind=params requires --family gtcnd|csgd");
            family = family_from_name(args.family);
            if (fc.c != 3) throw std::runtime_error("verify: params forecast must have 3 channels");
        }
        if (kind == Kind::quantiles && fc.c != static_cast<int>(levels->size()))
            throw std::runtime_error("verify: quantile forecast must have " +
                                     std::to_string(levels->size()) + " channels");
        // 18-class histograms need 107 quantiles or a 17-member ensemble
        const bool ranks_available = kind != Kind::ensemble || fc.c == 17;

        // per-point accumulators
        std::vector<double> crps_sum(n_points, 0.0);
        std::vector<RankHistogram> hists(n_points);
        std::vector<std::vector<double>> probs(thresholds.size());
        std::vector<std::vector<std::uint8_t>> events(thresholds.size());
        for (auto& p : probs) p.resize(static_cast<std::size_t>(fc.n) * n_points);
        for (auto& e : events) e.resize(static_cast<std::size_t>(fc.n) * n_points);

        parallel_for(n_points, [&](std::size_t pt) {
            const int y = static_cast<int>(pt) / W;
            const int x = static_cast<int>(pt) % W;
            std::mt19937_64 rng = make_rng(seed, 0xbeef0000 + pt);
            std::vector<int> ranks;
            ranks.reserve(fc.n);
            for (int i = 0; i < fc.n; ++i) {
                const double yv = obs.at(i, y, x, 0);
                const auto vals = fc.point(i, y, x);
                double crps;
                if (kind == Kind::quantiles) {
                    QuantileForecast qf(levels, std::vector<double>(vals.begin(), vals.end()));
                    crps = crps_from_quantiles(qf, yv);
                    ranks.push_back(observation_rank(qf, yv, rng));
                    for (std::size_t t = 0; t < thresholds.size(); ++t)
                        probs[t][static_cast<std::size_t>(i) * n_points + pt] =
                            exceedance_prob(qf, thresholds[t]);
                } else if (kind == Kind::params) {
                    if (*family == Family::gtcnd) {
                        const GtcndParams p(vals[0], vals[1], vals[2]);
                        crps = crps_gtcnd(p, yv);
                        std::vector<double> qv(levels->size());
                        for (std::size_t l = 0; l < qv.size(); ++l)
                            qv[l] = gtcnd_quantile(p, (*levels)[l]);
                        QuantileForecast qf(levels, std::move(qv));
                        ranks.push_back(observation_rank(qf, yv, rng));
                        for (std::size_t t = 0; t < thresholds.size(); ++t)
                            probs[t][static_cast<std::size_t>(i) * n_points + pt] =
                                exceedance_prob(p, thresholds[t]);
                    } else {
                        const CsgdParams p(vals[0], vals[1], vals[2]);
                        crps = crps_csgd(p, yv);
                        std::vector<double> qv(levels->size());
                        for (std::size_t l = 0; l < qv.size(); ++l)
                            qv[l] = csgd_quantile(p, (*levels)[l]);
                        QuantileForecast qf(levels, std::move(qv));
                        ranks.push_back(observation_rank(qf, yv, rng));
                        for (std::size_t t = 0; t < thresholds.size(); ++t)
                            probs[t][static_cast<std::size_t>(i) * n_points + pt] =
                                exceedance_prob(p, thresholds[t]);
                    }
                } else {
                    crps = crps_ensemble_fair(vals, yv);
                    if (ranks_available) ranks.push_back(member_rank(vals, yv, rng));
                    for (std::size_t t = 0; t < thresholds.size(); ++t) {
                        std::size_t above = 0;
                        for (double v : vals)
                            if (v > thresholds[t]) ++above;
                        probs[t][static_cast<std::size_t>(i) * n_points + pt] =
                            static_cast<double>(above) / static_cast<double>(vals.size());
                    }
                }
                crps_sum[pt] += crps;
                for (std::size_t t = 0; t < thresholds.size(); ++t)
                    events[t][static_cast<std::size_t>(i) * n_points + pt] =
                        yv > thresholds[t] ? 1 : 0;
            }
            if (!ranks.empty()) {
                hists[pt] = (kind == Kind::ensemble)
                                ? rank_histogram_from_member_ranks(ranks)
                                : rank_histogram_from_quantile_ranks(ranks);
            }
        });

        fs::create_directories(args.out_dir);

        // per-point mean CRPS map
        Tensor4 crps_map(1, H, W, 1);
        Report crps_rep;
        crps_rep.columns = {"row", "col", "mean_crps"};
        for (std::size_t pt = 0; pt < n_points; ++pt) {
            const double m = crps_sum[pt] / static_cast<double>(fc.n);
            crps_map.at(0, static_cast<int>(pt) / W, static_cast<int>(pt) % W, 0) = m;
            crps_rep.add_row({static_cast<std::int64_t>(pt / W),
                              static_cast<std::int64_t>(pt % W), m});
        }
        write_report((fs::path(args.out_dir) / "crps.csv").string(), crps_rep);
        write_grid((fs::path(args.out_dir) / "crps_map.gpt").string(), crps_map);

        if (ranks_available) {
            RankHistogram pooled;
            for (const auto& h : hists) pooled.merge(h);
            Report hist_rep;
            hist_rep.columns = {"class", "count"};
            for (int k = 0; k < RankHistogram::kClasses; ++k)
                hist_rep.add_row({static_cast<std::int64_t>(k + 1),
                                  static_cast<std::int64_t>(pooled.counts[k])});
            write_report((fs::path(args.out_dir) / "rankhist.csv").string(), hist_rep);

            // per-point flatness map when each point has enough samples
            if (fc.n >= 90) {
                Report jpz_rep;
                jpz_rep.columns = {"row", "col", "bias_p", "dispersion_p", "wave_p", "reject"};
                for (std::size_t pt = 0; pt < n_points; ++pt) {
                    const JpzResult r = jpz_test(hists[pt], args.alpha);
                    jpz_rep.add_row({static_cast<std::int64_t>(pt / W),
                                     static_cast<std::int64_t>(pt % W), r.bias_p,
                                     r.dispersion_p, r.wave_p,
                                     static_cast<std::int64_t>(r.reject_flatness ? 1 : 0)});
                }
                write_report((fs::path(args.out_dir) / "jpz_map.csv").string(), jpz_rep);
            }
        }

        // pooled ROC per threshold
        Report summary;
        summary.columns = {"metric", "value"};
        const CensorMask mask = make_censor_mask(ds.mask, args.censor_border);
        std::vector<double> kept;
        std::vector<double> all_means(n_points);
        for (std::size_t pt = 0; pt < n_points; ++pt) {
            all_means[pt] = crps_sum[pt] / static_cast<double>(fc.n);
            if (mask.keep[pt]) kept.push_back(all_means[pt]);
        }
        summary.add_row({std::string("mean_crps"), mean_of(all_means)});
        summary.add_row({std::string("mean_crps_censored"), mean_of(kept)});
        summary.add_row({std::string("n_days"), static_cast<std::int64_t>(fc.n)});
        summary.add_row({std::string("n_points"), static_cast<std::int64_t>(n_points)});

        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            bool any = false, all = true;
            for (auto e : events[t]) {
                any = any || e;
                all = all && e;
            }
            if (!any || all) {
                summary.add_row({std::string("auc_t" + format_threshold(thresholds[t])),
                                 std::string("degenerate")});
                continue;
            }
            const RocCurve roc = roc_curve(probs[t], events[t]);
            Report roc_rep;
            roc_rep.columns = {"false_alarm_rate", "hit_rate"};
            for (std::size_t k = 0; k < roc.hit_rate.size(); ++k)
                roc_rep.add_row({roc.false_alarm_rate[k], roc.hit_rate[k]});
            write_report((fs::path(args.out_dir) /
                          ("roc_t" + format_threshold(thresholds[t]) + ".csv"))
                             .string(),
                         roc_rep);
            summary.add_row({std::string("auc_t" + format_threshold(thresholds[t])), roc.auc});
        }
        write_report((fs::path(args.out_dir) / "summary.csv").string(), summary);
    });
}

// ------------------------------------------------------------ report

int cmd_report(const ReportArgs& args) {
    return run_guarded("report", [&] {
        const CsvTable scores = read_csv_numeric(args.scores_path);
        const CsvTable ref = read_csv_numeric(args.ref_scores_path);
        if (scores.rows.size() != ref.rows.size())
            throw std::runtime_error("report: score tables have different sizes");
        const Tensor4 mask_grid = read_grid(args.mask_path);
        const CensorMask mask = make_censor_mask(mask_grid, args.censor_border);

        int H = 0, W = 0;
        for (const auto& row : scores.rows) {
            H = std::max(H, static_cast<int>(row[0]) + 1);
            W = std::max(W, static_cast<int>(row[1]) + 1);
        }
        if (H != mask_grid.h || W != mask_grid.w)
            throw std::runtime_error("report: score map dims do not match the mask");
        Tensor4 s(1, H, W, 1), r(1, H, W, 1);
        for (const auto& row : scores.rows)
            s.at(0, static_cast<int>(row[0]), static_cast<int>(row[1]), 0) = row[2];
        for (const auto& row : ref.rows)
            r.at(0, static_cast<int>(row[0]), static_cast<int>(row[1]), 0) = row[2];

        const CrpssMap map = crpss_map(s, r, mask);

        fs::create_directories(args.out_dir);
        Report rep;
        rep.columns = {"row", "col", "score", "skill"};
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                rep.add_row({static_cast<std::int64_t>(y), static_cast<std::int64_t>(x),
                             s.at(0, y, x, 0), map.skill.at(0, y, x, 0)});
        write_report((fs::path(args.out_dir) / "crpss.csv").string(), rep);

        Report summary;
        summary.columns = {"metric", "value"};
        std::vector<double> full_s, full_r;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                full_s.push_back(s.at(0, y, x, 0));
                full_r.push_back(r.at(0, y, x, 0));
            }
        const double full_mean_ref = mean_of(full_r);
        if (full_mean_ref != 0.0)
            summary.add_row({std::string("crpss_full"),
                             (full_mean_ref - mean_of(full_s)) / full_mean_ref});
        else
            summary.add_row({std::string("crpss_full"), std::string("undefined")});
        if (map.masked_mean)
            summary.add_row({std::string("crpss_censored"), *map.masked_mean});
        else
            summary.add_row({std::string("crpss_censored"), std::string("undefined")});
        summary.add_row({std::string("n_censored"), static_cast<std::int64_t>(mask.count())});
        write_report((fs::path(args.out_dir) / "crpss_summary.csv").string(), summary);
    });
}

}  // namespace gridcast
