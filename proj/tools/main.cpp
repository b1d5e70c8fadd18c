// Command-line front end: dataset generation, pretraining, evaluation,
// theorem verification, and report emission.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dacl/dataset.hpp"
#include "dacl/run_io.hpp"
#include "dacl/theory.hpp"
#include "dacl/train.hpp"

namespace fs = std::filesystem;
using namespace dacl;

namespace {

// Metrics JSONL, flushed at every epoch boundary.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
        if (!out_) throw IoError("metrics: cannot open " + path);
        path_ = path;
    }
    void operator()(const MetricsRecord& rec) {
        if (rec.epoch != last_epoch_) {
            out_.flush();
            last_epoch_ = rec.epoch;
        }
        out_ << metrics_to_json_line(rec) << '\n';
        if (!out_) throw IoError("metrics: write failed for " + path_);
    }
    void close() {
        out_.flush();
        if (!out_) throw IoError("metrics: write failed for " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
    long last_epoch_ = -1;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path);
    f << text;
    if (!f) throw IoError("write failed for " + path);
}

struct LoadedData {
    Dataset train;
    Dataset test;
};

LoadedData load_and_split(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw ContractError("config: data.path is required");
    Dataset ds = load_csv(cfg.data_path, cfg.label_column);
    if (cfg.normalize) ds = normalize_minmax(ds);
    Rng split_rng(cfg.train.seed, streams::dataset_split());
    auto [train, test] = split(ds, cfg.test_fraction, split_rng);
    return {std::move(train), std::move(test)};
}

// Fills in encoder/head widths that were left to be derived from the data.
void resolve_widths(RunConfig& cfg, std::size_t input_dim) {
    if (cfg.train.encoder.input_dim() != input_dim) {
        std::vector<std::size_t> w = cfg.train.encoder.widths;
        w[0] = input_dim;
        cfg.train.encoder = MlpSpec::make(w, false);
    }
}

void echo_config(const RunConfig& cfg, const std::string& out_dir) {
    write_text(out_dir + "/config.json", run_config_to_json(cfg));
}

int cmd_gen_data(const std::string& kind, std::size_t n, std::size_t d, std::size_t r,
                 double scale, double separation, std::size_t noise_dims, double noise_scale,
                 std::uint64_t seed, const std::string& out) {
    Rng rng(seed, 0);
    Dataset ds;
    if (kind == "lowrank") {
        ds = gen_lowrank_gaussian(n, d, r, scale, rng);
    } else if (kind == "blobs") {
        ds = gen_two_class_blobs(n, d, separation, rng);
        if (noise_dims > 0) ds = append_noise_dims(ds, noise_dims, noise_scale, rng);
    } else {
        throw ContractError("gen-data: unknown kind '" + kind + "'");
    }
    save_csv(ds, out);
    std::cout << "wrote " << ds.n() << " x " << ds.dim() << (ds.has_labels() ? " labeled" : "")
              << " -> " << out << "\n";
    return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg = load_run_config(config_path);
    LoadedData data = load_and_split(cfg);
    resolve_widths(cfg, data.train.dim());
    fs::create_directories(out_dir);
    echo_config(cfg, out_dir);
    MetricsWriter metrics(out_dir + "/metrics.jsonl");
    PretrainResult result = pretrain(cfg.train, data.train, std::ref(metrics));
    metrics.close();
    save_checkpoint(result.encoder, out_dir + "/encoder.ckpt");
    save_checkpoint(result.head, out_dir + "/head.ckpt");
    std::cout << "pretrained " << cfg.train.epochs << " epochs -> " << out_dir << "\n";
    return 0;
}

int cmd_linear_eval(const std::string& config_path, const std::string& encoder_path,
                    const std::string& out_dir, std::string method) {
    RunConfig cfg = load_run_config(config_path);
    LoadedData data = load_and_split(cfg);
    resolve_widths(cfg, data.train.dim());
    fs::create_directories(out_dir);
    echo_config(cfg, out_dir);
    MetricsWriter metrics(out_dir + "/metrics.jsonl");
    double acc;
    if (encoder_path.empty()) {
        if (method.empty()) method = "no_pretraining";
        acc = no_pretrain_eval(cfg.train, data.train, data.test, std::ref(metrics));
    } else {
        if (method.empty()) method = "pretrained";
        MlpParams encoder = load_checkpoint(encoder_path);
        acc = linear_eval(encoder, data.train, data.test, cfg.train, std::ref(metrics));
    }
    metrics.close();
    write_text(out_dir + "/result.json",
               run_result_to_json({method, acc, cfg.train.seed, cfg.train.eval.epochs}));
    std::cout << method << " accuracy " << acc << " -> " << out_dir << "\n";
    return 0;
}

int cmd_supervised(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg = load_run_config(config_path);
    LoadedData data = load_and_split(cfg);
    resolve_widths(cfg, data.train.dim());
    fs::create_directories(out_dir);
    echo_config(cfg, out_dir);
    MetricsWriter metrics(out_dir + "/metrics.jsonl");
    double acc = supervised_train(cfg.train, data.train, data.test, std::ref(metrics));
    metrics.close();
    write_text(out_dir + "/result.json",
               run_result_to_json({"supervised", acc, cfg.train.seed, cfg.train.epochs}));
    std::cout << "supervised accuracy " << acc << " -> " << out_dir << "\n";
    return 0;
}

int cmd_verify(int theorem, const std::string& noise, std::uint64_t seed, std::size_t instances,
               std::size_t mc_pairs, const std::string& out) {
    std::vector<TheoremReport> reports;
    if (theorem == 1) {
        for (std::size_t k = 0; k < instances; ++k) {
            WorldParams wp;
            wp.m = k % 2 == 0 ? 4 : 6;
            wp.pool_size = k % 2 == 0 ? 2 : 3;
            TheoremNoise tn = noise == "gaussian" ? TheoremNoise::gaussian_discretized
                                                  : TheoremNoise::mixup;
            if (noise.empty())
                tn = k % 2 == 0 ? TheoremNoise::mixup : TheoremNoise::gaussian_discretized;
            reports.push_back(verify_theorem1(make_random_world(seed + k, wp, tn), tn));
        }
    } else if (theorem == 2) {
        const std::vector<double> alphas = {0.04, 0.02, 0.01, 0.005};
        for (std::size_t k = 0; k < instances; ++k) {
            Theorem2Instance inst = make_theorem2_instance(seed + k, 6, 8);
            if (noise.empty() || noise == "mixup")
                reports.push_back(
                    verify_theorem2_mixup(inst.w, inst.x, inst.y, inst.pool, alphas));
            if (noise.empty() || noise == "gaussian") {
                Rng rng(seed + k, 401);
                double f = 0.0;
                for (std::size_t j = 0; j < inst.w.size(); ++j) f += inst.w[j] * inst.x[j];
                std::vector<double> g_alphas =
                    gaussian_check_alphas(f, inst.sigma * norm2(inst.w), mc_pairs);
                reports.push_back(verify_theorem2_gaussian(inst.w, inst.x, inst.y, inst.sigma,
                                                           g_alphas, mc_pairs, rng));
            }
        }
    } else if (theorem == 4) {
        Rng data_rng(seed, 402);
        Dataset ds = gen_lowrank_gaussian(256, 32, 3, 1.0, data_rng);
        Rng signs_l2(seed, 403);
        Rng signs_mix = signs_l2;
        RademacherEstimate l2 = empirical_rademacher(ds.features, FunctionClass::l2_ball, 1.0,
                                                     2000, signs_l2);
        RademacherEstimate mix = empirical_rademacher(ds.features, FunctionClass::mixup_ball, 1.0,
                                                      2000, signs_mix);
        BoundPair bounds = bound_compare(ds.features, 1.0, 9.0 * 3.0);
        TheoremReport rep;
        rep.theorem = "theorem4";
        rep.lhs = mix.mean;
        rep.rhs = l2.mean;
        rep.tolerance = 0.5;
        rep.pass = mix.mean < 0.5 * l2.mean;
        rep.notes = "rank=" + std::to_string(bounds.rank) +
                    " l2_bound=" + std::to_string(bounds.l2_bound) +
                    " mixup_bound=" + std::to_string(bounds.mixup_bound);
        reports.push_back(rep);
    } else {
        throw ContractError("verify: theorem must be 1, 2 or 4");
    }
    std::string text = reports.size() == 1 ? theorem_report_to_json(reports[0])
                                           : theorem_reports_to_json(reports);
    if (out.empty())
        std::cout << text;
    else
        write_text(out, text);
    bool all = true;
    for (const TheoremReport& r : reports) all = all && r.pass;
    std::cout << (all ? "all checks passed" : "SOME CHECKS FAILED") << " (" << reports.size()
              << " reports)\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& results, const std::vector<std::string>& theorems,
               const std::string& out_csv, const std::string& out_json) {
    ReportSummary summary = build_report(results, theorems);
    if (!out_csv.empty()) write_text(out_csv, summary.csv);
    if (!out_json.empty()) write_text(out_json, summary.json);
    std::cout << summary.csv;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("DACL_THREADS"))
        set_thread_budget(std::atoi(threads));

    CLI::App app{"Domain-agnostic contrastive learning on tabular data"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
    std::string gen_kind;
    std::size_t gen_n = 512, gen_d = 32, gen_r = 3, gen_noise_dims = 0;
    double gen_scale = 1.0, gen_sep = 3.0, gen_noise_scale = 1.0;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "data.csv";
    gen->add_option("kind", gen_kind, "lowrank | blobs")->required();
    gen->add_option("--n", gen_n, "rows");
    gen->add_option("--d", gen_d, "feature dims");
    gen->add_option("--r", gen_r, "rank (lowrank)");
    gen->add_option("--scale", gen_scale, "scale (lowrank)");
    gen->add_option("--separation", gen_sep, "class separation (blobs)");
    gen->add_option("--noise-dims", gen_noise_dims, "appended noise dims (blobs)");
    gen->add_option("--noise-scale", gen_noise_scale, "noise dim std (blobs)");
    gen->add_option("--seed", gen_seed, "seed");
    gen->add_option("--out", gen_out, "output CSV path")->required();

    auto* pre = app.add_subcommand("pretrain", "contrastive pretraining per Algorithm config");
    std::string pre_config, pre_out = "run";
    pre->add_option("--config", pre_config, "JSON config path")->required();
    pre->add_option("--out-dir", pre_out, "output directory");

    auto* lin = app.add_subcommand("linear-eval", "linear evaluation of a frozen encoder");
    std::string lin_config, lin_encoder, lin_out = "eval", lin_method;
    lin->add_option("--config", lin_config, "JSON config path")->required();
    lin->add_option("--encoder", lin_encoder, "encoder checkpoint (omit for no-pretraining)");
    lin->add_option("--out-dir", lin_out, "output directory");
    lin->add_option("--method", lin_method, "method label for the result record");

    auto* sup = app.add_subcommand("supervised", "end-to-end supervised baseline");
    std::string sup_config, sup_out = "supervised";
    sup->add_option("--config", sup_config, "JSON config path")->required();
    sup->add_option("--out-dir", sup_out, "output directory");

    auto* ver = app.add_subcommand("verify", "numerical theorem checks");
    int ver_theorem = 1;
    std::string ver_noise, ver_out;
    std::uint64_t ver_seed = 7;
    std::size_t ver_instances = 4, ver_pairs = 200000;
    ver->add_option("--theorem", ver_theorem, "1 | 2 | 4")->required();
    ver->add_option("--noise", ver_noise, "mixup | gaussian (default: both)");
    ver->add_option("--seed", ver_seed, "seed");
    ver->add_option("--instances", ver_instances, "instances per check");
    ver->add_option("--mc-pairs", ver_pairs, "antithetic pairs for the gaussian check");
    ver->add_option("--out", ver_out, "report JSON path (default: stdout)");

    auto* rep = app.add_subcommand("report", "aggregate results and theorem reports");
    std::vector<std::string> rep_results, rep_theorems;
    std::string rep_csv, rep_json;
    rep->add_option("--results", rep_results, "result.json paths");
    rep->add_option("--theorems", rep_theorems, "theorem report paths");
    rep->add_option("--out-csv", rep_csv, "summary CSV path");
    rep->add_option("--out-json", rep_json, "summary JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints usage/help
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(gen_kind, gen_n, gen_d, gen_r, gen_scale, gen_sep,
                                gen_noise_dims, gen_noise_scale, gen_seed, gen_out);
        if (pre->parsed()) return cmd_pretrain(pre_config, pre_out);
        if (lin->parsed()) return cmd_linear_eval(lin_config, lin_encoder, lin_out, lin_method);
        if (sup->parsed()) return cmd_supervised(sup_config, sup_out);
        if (ver->parsed())
            return cmd_verify(ver_theorem, ver_noise, ver_seed, ver_instances, ver_pairs, ver_out);
        if (rep->parsed()) return cmd_report(rep_results, rep_theorems, rep_csv, rep_json);
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
