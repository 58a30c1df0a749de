// Command-line front end: dataset generation, training, evaluation, and
// singular-value spectrum dumps, each writing a manifest that pins the fully
// resolved configuration.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nilu/dataset.hpp"
#include "nilu/spectral.hpp"

namespace {

// exit codes: 0 ok, 2 config, 3 I/O, 4 numerical breakdown, 5 divergence
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitDivergence = 5;

void write_manifest(const std::string& out_dir, const nlohmann::json& config) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = config;
    std::ofstream out(out_dir + "/run_manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
    out << j.dump(2) << "\n";
}

nilu::LossKind parse_loss(const std::string& name) {
    if (name == "max") return nilu::LossKind::max;
    if (name == "min") return nilu::LossKind::min;
    if (name == "min-hat") return nilu::LossKind::min_hat;
    if (name == "combined") return nilu::LossKind::combined;
    throw CLI::ValidationError("--loss", "unknown loss '" + name + "'");
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<nilu::NamedFactory> build_factories(const std::vector<std::string>& names,
                                                const std::string& model_path) {
    std::vector<nilu::NamedFactory> out;
    std::shared_ptr<nilu::ModelParams> model;
    for (const std::string& name : names) {
        if (name == "none") {
            out.push_back({name, [](const nilu::CsrMatrix&) {
                               return std::make_unique<nilu::IdentityPreconditioner>();
                           }});
        } else if (name == "jacobi") {
            out.push_back({name, [](const nilu::CsrMatrix& A) {
                               return std::make_unique<nilu::JacobiPreconditioner>(A);
                           }});
        } else if (name == "ilu0") {
            out.push_back({name, [](const nilu::CsrMatrix& A) {
                               return std::make_unique<nilu::FactoredPreconditioner>(
                                   nilu::ilu0(A), "ilu0");
                           }});
        } else if (name == "learned") {
            if (model_path.empty())
                throw CLI::ValidationError("--model",
                                           "the learned preconditioner needs a model file");
            if (!model)
                model = std::make_shared<nilu::ModelParams>(nilu::load_model_json(model_path));
            out.push_back({name, [model](const nilu::CsrMatrix& A) {
                               const nilu::CoatesGraph g = nilu::coates_graph(A);
                               return std::make_unique<nilu::FactoredPreconditioner>(
                                   nilu::forward(*model, g), "learned");
                           }});
        } else {
            throw CLI::ValidationError("--precond", "unknown preconditioner '" + name + "'");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned and classical incomplete-LU preconditioners for GMRES"};
    app.require_subcommand(1);
    app.set_config("--config", "", "plain key=value config file");

    // --- generate ---
    auto* gen = app.add_subcommand("generate", "Generate a perturbed-Poisson dataset");
    int grid = 20, n_train = 50, n_val = 5, n_test = 5;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "data";
    gen->add_option("--grid", grid, "grid side length k (n = k^2)")->capture_default_str();
    gen->add_option("--train", n_train, "training instances")->capture_default_str();
    gen->add_option("--val", n_val, "validation instances")->capture_default_str();
    gen->add_option("--test", n_test, "test instances")->capture_default_str();
    gen->add_option("--seed", gen_seed, "base seed")->capture_default_str();
    gen->add_option("--out", gen_out, "output directory")->capture_default_str();

    // --- train ---
    auto* tr = app.add_subcommand("train", "Train the factorization network");
    std::string tr_data = "data", tr_out = "run", tr_loss = "max";
    double alpha = 0.2, lr = 0.001, clip = 1.0, eps = 1e-4;
    int epochs = 100;
    std::uint64_t tr_seed = 0;
    tr->add_option("--data", tr_data, "dataset directory")->capture_default_str();
    tr->add_option("--out", tr_out, "output directory")->capture_default_str();
    tr->add_option("--loss", tr_loss, "max | min | min-hat | combined")->capture_default_str();
    tr->add_option("--alpha", alpha, "combined-loss weight")->capture_default_str();
    tr->add_option("--lr", lr, "learning rate")->capture_default_str();
    tr->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    tr->add_option("--clip", clip, "gradient clipping norm")->capture_default_str();
    tr->add_option("--eps", eps, "diagonal guard epsilon")->capture_default_str();
    tr->add_option("--seed", tr_seed, "model initialization seed")->capture_default_str();

    // --- eval ---
    auto* ev = app.add_subcommand("eval", "Evaluate preconditioners on the test split");
    std::string ev_data = "data", ev_out = "eval", ev_precond = "none,jacobi,ilu0";
    std::string ev_model;
    double ev_tol = 1e-8;
    bool ev_svg = false;
    int jobs = 1;
    ev->add_option("--data", ev_data, "dataset directory")->capture_default_str();
    ev->add_option("--out", ev_out, "output directory")->capture_default_str();
    ev->add_option("--precond", ev_precond, "comma list: none,jacobi,ilu0,learned")
        ->capture_default_str();
    ev->add_option("--model", ev_model, "model JSON for the learned preconditioner");
    ev->add_option("--tol", ev_tol, "GMRES relative tolerance")->capture_default_str();
    ev->add_option("--jobs", jobs, "worker cap for evaluation cells")->capture_default_str();
    ev->add_flag("--svg", ev_svg, "also emit SVG histograms");

    // --- spectrum ---
    auto* sp = app.add_subcommand("spectrum", "Dump singular values of A P^{-1}");
    std::string sp_data = "data", sp_out = "spectrum", sp_precond = "none", sp_model;
    int sp_problem = 0;
    bool sp_svg = false, sp_edges_only = false;
    sp->add_option("--data", sp_data, "dataset directory")->capture_default_str();
    sp->add_option("--out", sp_out, "output directory")->capture_default_str();
    sp->add_option("--problem", sp_problem, "test-split problem index")->capture_default_str();
    sp->add_option("--precond", sp_precond, "none | jacobi | ilu0 | learned")
        ->capture_default_str();
    sp->add_option("--model", sp_model, "model JSON for the learned preconditioner");
    sp->add_flag("--svg", sp_svg, "also emit an SVG histogram");
    sp->add_flag("--edges-only", sp_edges_only,
                 "power-iteration estimate of sigma_max only (no dense SVD)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            const nilu::DatasetBundle ds =
                nilu::make_dataset(grid, n_train, n_val, n_test, gen_seed);
            nilu::save_dataset(ds, gen_out);
            write_manifest(gen_out, {{"subcommand", "generate"},
                                     {"grid", grid},
                                     {"train", n_train},
                                     {"val", n_val},
                                     {"test", n_test},
                                     {"seed", gen_seed},
                                     {"out", gen_out}});
            std::cout << "wrote " << (n_train + n_val + n_test) << " problems to " << gen_out
                      << "\n";
        } else if (tr->parsed()) {
            const nilu::DatasetBundle ds = nilu::load_dataset(tr_data);
            nilu::TrainConfig cfg;
            cfg.loss = parse_loss(tr_loss);
            cfg.alpha = alpha;
            cfg.lr = lr;
            cfg.epochs = epochs;
            cfg.clip = clip;
            cfg.eps = eps;
            cfg.seed = tr_seed;
            const nilu::ModelParams initial =
                nilu::init_model({}, eps, nilu::Aggregation::mean, tr_seed);
            std::filesystem::create_directories(tr_out);
            nilu::TrainResult result;
            try {
                result = nilu::train(initial, ds.train.samples, ds.val.samples, cfg);
            } catch (const nilu::TrainingDivergenceError& e) {
                std::cerr << "training diverged: " << e.what() << "\n";
                return kExitDivergence;
            }
            nilu::save_model_json(result.best, tr_out + "/model.json");
            nilu::write_history_csv(result.history, tr_out + "/history.csv");
            write_manifest(tr_out, {{"subcommand", "train"},
                                    {"data", tr_data},
                                    {"loss", tr_loss},
                                    {"alpha", alpha},
                                    {"lr", lr},
                                    {"epochs", epochs},
                                    {"clip", clip},
                                    {"eps", eps},
                                    {"seed", tr_seed},
                                    {"param_count", nilu::param_count(result.best)},
                                    {"best_epoch", result.best_epoch}});
            std::cout << "trained model (" << nilu::param_count(result.best)
                      << " parameters), best epoch " << result.best_epoch << "\n";
        } else if (ev->parsed()) {
            const nilu::DatasetBundle ds = nilu::load_dataset(ev_data);
            const auto factories = build_factories(split_csv(ev_precond), ev_model);
            nilu::EvalConfig cfg;
            cfg.tol = ev_tol;
            cfg.jobs = jobs;
            const nilu::EvalReport report = nilu::evaluate(ds.test.samples, factories, cfg);
            std::filesystem::create_directories(ev_out);
            nilu::write_report_csv(report, ev_out + "/report.csv");
            for (const auto& f : factories) {
                nilu::Vec pooled;
                for (const auto& cell : report.cells)
                    if (cell.preconditioner == f.name && !cell.failed)
                        pooled.insert(pooled.end(), cell.singular_values.begin(),
                                      cell.singular_values.end());
                const nilu::Histogram h = nilu::log_histogram(pooled);
                nilu::write_histogram_csv(h, ev_out + "/hist_" + f.name + ".csv");
                if (ev_svg)
                    nilu::write_histogram_svg(h, "singular values: " + f.name,
                                              ev_out + "/hist_" + f.name + ".svg");
            }
            write_manifest(ev_out, {{"subcommand", "eval"},
                                    {"data", ev_data},
                                    {"precond", ev_precond},
                                    {"model", ev_model},
                                    {"tol", ev_tol},
                                    {"jobs", jobs}});
            for (const auto& a : report.aggregates)
                std::cout << a.preconditioner << ": mean iterations " << a.iterations << " ("
                          << a.evaluated << " evaluated)\n";
        } else if (sp->parsed()) {
            const nilu::DatasetBundle ds = nilu::load_dataset(sp_data);
            if (sp_problem < 0 || sp_problem >= static_cast<int>(ds.test.samples.size()))
                throw CLI::ValidationError("--problem", "index out of range");
            const nilu::CsrMatrix& A = ds.test.samples[sp_problem].A;
            const auto factories = build_factories({sp_precond}, sp_model);
            const auto P = factories.front().make(A);
            std::filesystem::create_directories(sp_out);
            if (sp_edges_only) {
                const nilu::PowerResult pr = nilu::sigma_max_power(A, *P);
                std::ofstream out(sp_out + "/sigma_max.csv");
                out << "sigma_max,converged\n" << pr.sigma << "," << pr.converged << "\n";
                std::cout << "sigma_max ~ " << pr.sigma << "\n";
            } else {
                if (A.n > 2000) {
                    std::cerr << "problem exceeds the dense cap; rerun with --edges-only for a "
                                 "power-iteration estimate of the spectrum edges\n";
                    return kExitConfig;
                }
                const nilu::Vec sigma = nilu::svd_values(nilu::precond_dense(A, *P));
                std::ofstream out(sp_out + "/singular_values.csv");
                out << "sigma\n";
                for (double s : sigma) out << std::setprecision(12) << s << "\n";
                const nilu::Histogram h = nilu::log_histogram(sigma);
                nilu::write_histogram_csv(h, sp_out + "/hist_" + sp_precond + ".csv");
                if (sp_svg)
                    nilu::write_histogram_svg(h, "singular values: " + sp_precond,
                                              sp_out + "/hist_" + sp_precond + ".svg");
                std::cout << "sigma_max " << sigma.front() << ", sigma_min " << sigma.back()
                          << "\n";
            }
            write_manifest(sp_out, {{"subcommand", "spectrum"},
                                    {"data", sp_data},
                                    {"problem", sp_problem},
                                    {"precond", sp_precond},
                                    {"model", sp_model},
                                    {"edges_only", sp_edges_only}});
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nilu::NumericalBreakdownError& e) {
        std::cerr << "numerical breakdown: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const nilu::SingularFactorError& e) {
        std::cerr << "numerical breakdown: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const nilu::TrainingDivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
