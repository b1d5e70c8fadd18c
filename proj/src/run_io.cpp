#include "dacl/run_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dacl {

using nlohmann::ordered_json;

namespace {

void reject_unknown_keys(const ordered_json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key()))
            throw ContractError("config: unknown key '" + it.key() + "' in " + where);
}

std::vector<std::size_t> widths_from(const ordered_json& arr, const std::string& where) {
    std::vector<std::size_t> out;
    if (!arr.is_array()) throw ContractError("config: " + where + " must be an array");
    for (const auto& v : arr) out.push_back(v.get<std::size_t>());
    return out;
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw IoError(std::string("config: JSON parse failure: ") + e.what());
    }

    RunConfig cfg;
    cfg.train = TrainConfig::defaults(/*input_dim=*/1);  // widths may be overridden below
    reject_unknown_keys(j, {"data", "encoder_widths", "head_widths", "policy", "tau", "batch",
                            "epochs", "lr_ratio", "warmup_epochs", "weight_decay", "seed",
                            "mix_hidden_layer", "eval"},
                        "top level");

    if (j.contains("data")) {
        const auto& d = j["data"];
        reject_unknown_keys(d, {"path", "label_column", "test_fraction", "normalize"}, "data");
        if (d.contains("path")) cfg.data_path = d["path"].get<std::string>();
        if (d.contains("label_column") && !d["label_column"].is_null())
            cfg.label_column = d["label_column"].get<std::string>();
        if (d.contains("test_fraction")) cfg.test_fraction = d["test_fraction"].get<double>();
        if (d.contains("normalize")) cfg.normalize = d["normalize"].get<bool>();
    }
    if (j.contains("encoder_widths"))
        cfg.train.encoder = MlpSpec::make(widths_from(j["encoder_widths"], "encoder_widths"),
                                          /*final_linear=*/false);
    if (j.contains("head_widths"))
        cfg.train.head = MlpSpec::make(widths_from(j["head_widths"], "head_widths"),
                                       /*final_linear=*/true);
    if (j.contains("policy")) {
        const auto& p = j["policy"];
        reject_unknown_keys(p, {"kind", "alpha", "beta", "rho", "gaussian_scale"}, "policy");
        if (p.contains("kind")) cfg.train.policy.kind = noise_kind_from_name(p["kind"].get<std::string>());
        if (p.contains("alpha")) cfg.train.policy.alpha = p["alpha"].get<double>();
        if (p.contains("beta")) cfg.train.policy.beta = p["beta"].get<double>();
        if (p.contains("rho")) cfg.train.policy.rho = p["rho"].get<double>();
        if (p.contains("gaussian_scale"))
            cfg.train.policy.gaussian_scale = p["gaussian_scale"].get<double>();
    }
    if (j.contains("tau")) cfg.train.tau = j["tau"].get<double>();
    if (j.contains("batch")) cfg.train.batch = j["batch"].get<std::size_t>();
    if (j.contains("epochs")) cfg.train.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("lr_ratio")) cfg.train.lr_ratio = j["lr_ratio"].get<double>();
    if (j.contains("warmup_epochs")) cfg.train.warmup_epochs = j["warmup_epochs"].get<std::size_t>();
    if (j.contains("weight_decay")) cfg.train.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("seed")) cfg.train.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("mix_hidden_layer")) cfg.train.mix_hidden_layer = j["mix_hidden_layer"].get<int>();
    if (j.contains("eval")) {
        const auto& e = j["eval"];
        reject_unknown_keys(e, {"epochs", "batch", "lr_ratio"}, "eval");
        if (e.contains("epochs")) cfg.train.eval.epochs = e["epochs"].get<std::size_t>();
        if (e.contains("batch")) cfg.train.eval.batch = e["batch"].get<std::size_t>();
        if (e.contains("lr_ratio")) cfg.train.eval.lr_ratio = e["lr_ratio"].get<double>();
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["data"] = {{"path", cfg.data_path},
                 {"label_column", cfg.label_column ? ordered_json(*cfg.label_column)
                                                   : ordered_json(nullptr)},
                 {"test_fraction", cfg.test_fraction},
                 {"normalize", cfg.normalize}};
    j["encoder_widths"] = cfg.train.encoder.widths;
    j["head_widths"] = cfg.train.head.widths;
    j["policy"] = {{"kind", noise_kind_name(cfg.train.policy.kind)},
                   {"alpha", cfg.train.policy.alpha},
                   {"beta", cfg.train.policy.beta},
                   {"rho", cfg.train.policy.rho},
                   {"gaussian_scale", cfg.train.policy.gaussian_scale}};
    j["tau"] = cfg.train.tau;
    j["batch"] = cfg.train.batch;
    j["epochs"] = cfg.train.epochs;
    j["lr_ratio"] = cfg.train.lr_ratio;
    j["warmup_epochs"] = cfg.train.warmup_epochs;
    j["weight_decay"] = cfg.train.weight_decay;
    j["seed"] = cfg.train.seed;
    j["mix_hidden_layer"] = cfg.train.mix_hidden_layer;
    j["eval"] = {{"epochs", cfg.train.eval.epochs},
                 {"batch", cfg.train.eval.batch},
                 {"lr_ratio", cfg.train.eval.lr_ratio}};
    return j.dump(2) + "\n";
}

std::string metrics_to_json_line(const MetricsRecord& rec) {
    ordered_json j;
    j["phase"] = rec.phase;
    j["epoch"] = rec.epoch;
    j["step"] = rec.step;
    j["loss"] = rec.loss;
    j["lr"] = rec.lr;
    j["accuracy"] = rec.accuracy ? ordered_json(*rec.accuracy) : ordered_json(nullptr);
    j["seconds"] = rec.seconds;
    return j.dump();
}

namespace {

ordered_json report_to_obj(const TheoremReport& rep) {
    ordered_json j;
    j["theorem"] = rep.theorem;
    j["inputs_digest"] = rep.inputs_digest;
    j["lhs"] = rep.lhs;
    j["rhs"] = rep.rhs;
    j["alphas"] = rep.alphas;
    j["residuals"] = rep.residuals;
    j["fitted_slope"] = rep.fitted_slope;
    j["slope_low"] = rep.slope_low;
    j["slope_high"] = rep.slope_high;
    j["tolerance"] = rep.tolerance;
    j["pass"] = rep.pass;
    j["notes"] = rep.notes;
    return j;
}

TheoremReport report_from_obj(const ordered_json& j) {
    TheoremReport rep;
    rep.theorem = j.at("theorem").get<std::string>();
    rep.inputs_digest = j.value("inputs_digest", "");
    rep.lhs = j.value("lhs", 0.0);
    rep.rhs = j.value("rhs", 0.0);
    if (j.contains("alphas")) rep.alphas = j["alphas"].get<std::vector<double>>();
    if (j.contains("residuals")) rep.residuals = j["residuals"].get<std::vector<double>>();
    rep.fitted_slope = j.value("fitted_slope", 0.0);
    rep.slope_low = j.value("slope_low", 0.0);
    rep.slope_high = j.value("slope_high", 0.0);
    rep.tolerance = j.value("tolerance", 0.0);
    rep.pass = j.at("pass").get<bool>();
    rep.notes = j.value("notes", "");
    return rep;
}

} // namespace

std::string theorem_report_to_json(const TheoremReport& rep) {
    return report_to_obj(rep).dump(2) + "\n";
}

std::string theorem_reports_to_json(const std::vector<TheoremReport>& reps) {
    ordered_json arr = ordered_json::array();
    for (const TheoremReport& r : reps) arr.push_back(report_to_obj(r));
    return arr.dump(2) + "\n";
}

std::vector<TheoremReport> theorem_reports_from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("theorem report: cannot open " + path);
    ordered_json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw IoError("theorem report: malformed file " + path + ": " + e.what());
    }
    std::vector<TheoremReport> out;
    try {
        if (j.is_array())
            for (const auto& item : j) out.push_back(report_from_obj(item));
        else
            out.push_back(report_from_obj(j));
    } catch (const std::exception& e) {
        throw IoError("theorem report: malformed file " + path + ": " + e.what());
    }
    return out;
}

std::string run_result_to_json(const RunResult& r) {
    ordered_json j;
    j["method"] = r.method;
    j["accuracy"] = r.accuracy;
    j["seed"] = r.seed;
    j["epochs"] = r.epochs;
    return j.dump(2) + "\n";
}

RunResult run_result_from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("result: cannot open " + path);
    ordered_json j;
    try {
        f >> j;
        RunResult r;
        r.method = j.at("method").get<std::string>();
        r.accuracy = j.at("accuracy").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.epochs = j.at("epochs").get<std::size_t>();
        return r;
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError("result: malformed file " + path + ": " + e.what());
    }
}

ReportSummary build_report(const std::vector<std::string>& result_paths,
                           const std::vector<std::string>& theorem_paths) {
    require(!result_paths.empty() || !theorem_paths.empty(), "report: no inputs");

    std::vector<RunResult> results;
    for (const std::string& p : result_paths) results.push_back(run_result_from_file(p));
    std::vector<TheoremReport> theorems;
    for (const std::string& p : theorem_paths) {
        std::vector<TheoremReport> reps = theorem_reports_from_file(p);
        theorems.insert(theorems.end(), reps.begin(), reps.end());
    }

    std::ostringstream csv;
    csv << "method,accuracy,seed,epochs\n";
    for (const RunResult& r : results)
        csv << r.method << ',' << r.accuracy << ',' << r.seed << ',' << r.epochs << '\n';

    std::map<std::string, std::vector<double>> by_method;
    for (const RunResult& r : results) by_method[r.method].push_back(r.accuracy);

    ordered_json summary;
    ordered_json methods = ordered_json::object();
    for (auto& [name, accs] : by_method) {
        std::sort(accs.begin(), accs.end());
        double median = accs.size() % 2 == 1
                            ? accs[accs.size() / 2]
                            : 0.5 * (accs[accs.size() / 2 - 1] + accs[accs.size() / 2]);
        methods[name] = {{"median_accuracy", median}, {"runs", accs.size()}};
    }
    summary["methods"] = methods;

    bool all_pass = true;
    ordered_json theorem_arr = ordered_json::array();
    for (const TheoremReport& rep : theorems) {
        all_pass = all_pass && rep.pass;
        theorem_arr.push_back(report_to_obj(rep));
    }
    summary["theorems"] = theorem_arr;
    summary["all_theorems_pass"] = all_pass;

    ReportSummary out;
    out.csv = csv.str();
    out.json = summary.dump(2) + "\n";
    out.all_theorems_pass = all_pass;
    return out;
}

} // namespace dacl
