#include "xsec/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xsec/analysis.hpp"
#include "xsec/estimators.hpp"
#include "xsec/oracle.hpp"

namespace xsec::cli {

namespace {

using nlohmann::ordered_json;

struct HelpRequested {
    std::string text;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_vec(const Vector& v) {
    std::string s = "\"";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += fmt(v[i]);
    }
    return s + "\"";
}

std::vector<double> parse_grid(const std::string& grid) {
    double lo = 0.0, hi = 0.0;
    int count = 0;
    char extra = 0;
    if (std::sscanf(grid.c_str(), "%lf:%lf:%d%c", &lo, &hi, &count, &extra) != 3 || count < 1)
        throw UsageError("--grid must be lo:hi:count with count >= 1");
    std::vector<double> ts;
    ts.reserve(static_cast<size_t>(count));
    if (count == 1) {
        ts.push_back(lo);
        return ts;
    }
    for (int i = 0; i < count; ++i)
        ts.push_back(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
    return ts;
}

MCConfig mc_config(const RunConfig& cfg) {
    MCConfig mc;
    mc.samples = cfg.samples;
    mc.batches = cfg.batches;
    mc.seed = cfg.seed;
    mc.median_of_means = cfg.median_of_means;
    return mc;
}

DilationVector dilation_from(const RunConfig& cfg, int n) {
    if (!cfg.a.empty()) {
        if (static_cast<int>(cfg.a.size()) != n)
            throw std::invalid_argument("--a has " + std::to_string(cfg.a.size()) +
                                        " entries but the subspace lives in R^" + std::to_string(n));
        return DilationVector(cfg.a);
    }
    if (static_cast<int>(cfg.t.size()) != n)
        throw std::invalid_argument("--t has " + std::to_string(cfg.t.size()) +
                                    " entries but the subspace lives in R^" + std::to_string(n));
    return to_dilation(LogDilation(cfg.t));
}

void emit(const RunConfig& cfg, const ordered_json& j, const std::string& csv) {
    const std::string text = cfg.format == OutputFormat::json ? j.dump(2) + "\n" : csv;
    if (cfg.output_path) {
        std::ofstream f(*cfg.output_path, std::ios::binary);
        if (!f) throw IoError("cannot open output file: " + *cfg.output_path);
        f << text;
    } else {
        std::cout << text;
    }
}

ordered_json estimate_json(const char* command, const RunConfig& cfg, int n, int dim_H,
                           const VolumeEstimate& est) {
    ordered_json j;
    j["command"] = command;
    j["method"] = method_name(est.method);
    j["n"] = n;
    j["dim_H"] = dim_H;
    j["value"] = est.value;
    j["stderr"] = est.stderr_;
    j["samples"] = est.samples;
    j["batches"] = est.batches;
    j["seed"] = cfg.seed;
    j["singular_samples"] = est.singular_samples;
    j["tail_warning"] = est.tail_warning;
    return j;
}

std::string estimate_csv(const char* command, const RunConfig& cfg, int n, int dim_H,
                         const VolumeEstimate& est) {
    std::ostringstream os;
    os << "command,method,n,dim_H,value,stderr,samples,batches,seed,singular_samples,"
          "tail_warning\n";
    os << command << ',' << method_name(est.method) << ',' << n << ',' << dim_H << ','
       << fmt(est.value) << ',' << fmt(est.stderr_) << ',' << est.samples << ',' << est.batches
       << ',' << cfg.seed << ',' << est.singular_samples << ',' << (est.tail_warning ? 1 : 0)
       << '\n';
    return os.str();
}

int run_estimate(const RunConfig& cfg) {
    const SubspaceSpec s = load_subspace(*cfg.subspace_path);
    const DilationVector a = dilation_from(cfg, s.n);
    const MCConfig mc = mc_config(cfg);
    const VolumeEstimate est = cfg.mode == "codim" ? estimate_codim(codim_profile(s), a, mc)
                                                   : estimate_dim(dim_profile(s), a, mc);
    if (est.tail_warning)
        std::cerr << "warning: top 0.1% of samples carries >20% of the mass; "
                     "the reported stderr may be unreliable\n";
    emit(cfg, estimate_json("estimate", cfg, s.n, s.dim_H, est),
         estimate_csv("estimate", cfg, s.n, s.dim_H, est));
    return 0;
}

int run_oracle(const RunConfig& cfg) {
    const SubspaceSpec s = load_subspace(*cfg.subspace_path);
    const DilationVector a = dilation_from(cfg, s.n);
    VolumeEstimate est;
    est.seed = cfg.seed;
    if (s.dim_H == s.n) {
        est.value = full_volume(a);
        est.method = Method::closed_form;
    } else {
        SectionBody body(dim_profile(s), a);
        if (s.dim_H == 1) {
            est.value = volume_k1(body);
            est.method = Method::oracle_k1;
        } else if (s.dim_H == 2) {
            est.value = volume_k2(body);
            est.method = Method::oracle_k2;
        } else {
            est = volume_mc(body, mc_config(cfg));
        }
    }
    emit(cfg, estimate_json("oracle", cfg, s.n, s.dim_H, est),
         estimate_csv("oracle", cfg, s.n, s.dim_H, est));
    return 0;
}

int run_scan(const RunConfig& cfg) {
    const SubspaceSpec s = load_subspace(*cfg.subspace_path);
    const ProfileMode mode = cfg.mode == "codim" ? ProfileMode::codim : ProfileMode::dim;
    const ConcavityReport report = logconcavity_scan(s, cfg.triples, cfg.box, mc_config(cfg), mode);

    ordered_json j;
    j["command"] = "scan";
    j["n"] = s.n;
    j["dim_H"] = s.dim_H;
    j["mode"] = cfg.mode;
    j["box"] = cfg.box;
    j["triples"] = cfg.triples;
    j["samples"] = cfg.samples;
    j["batches"] = cfg.batches;
    j["seed"] = cfg.seed;
    j["violations"] = report.violations();
    j["consistent"] = report.consistent();
    j["inconclusive"] = report.inconclusive();
    auto rows = ordered_json::array();

    std::ostringstream os;
    os << "triple,margin,stderr,verdict,f0,fmid,f1,samples,batches,seed,t0,tmid,t1\n";
    for (size_t i = 0; i < report.triples.size(); ++i) {
        const ScanTriple& tr = report.triples[i];
        ordered_json r;
        r["triple"] = i;
        r["margin"] = tr.margin;
        r["stderr"] = tr.stderr_;
        r["verdict"] = verdict_name(tr.verdict);
        r["f0"] = tr.f0;
        r["fmid"] = tr.fmid;
        r["f1"] = tr.f1;
        r["t0"] = tr.t0;
        r["tmid"] = tr.tmid;
        r["t1"] = tr.t1;
        rows.push_back(std::move(r));
        os << i << ',' << fmt(tr.margin) << ',' << fmt(tr.stderr_) << ','
           << verdict_name(tr.verdict) << ',' << fmt(tr.f0) << ',' << fmt(tr.fmid) << ','
           << fmt(tr.f1) << ',' << cfg.samples << ',' << cfg.batches << ',' << cfg.seed << ','
           << fmt_vec(tr.t0) << ',' << fmt_vec(tr.tmid) << ',' << fmt_vec(tr.t1) << '\n';
    }
    j["rows"] = std::move(rows);
    emit(cfg, j, os.str());
    return 0;
}

int run_counterexample(const RunConfig& cfg) {
    const std::vector<double> ts = parse_grid(cfg.grid);
    const auto curve = counterexample_curve(ts);
    const ViolationCertificate cert = counterexample_violation();

    ordered_json j;
    j["command"] = "counterexample";
    j["grid"] = cfg.grid;
    j["seed"] = cfg.seed;
    j["samples"] = 0;
    auto rows = ordered_json::array();
    std::ostringstream os;
    os << "record,t,value,seed,samples\n";
    for (const auto& [t, f] : curve) {
        ordered_json r;
        r["t"] = t;
        r["f"] = f;
        rows.push_back(std::move(r));
        os << "curve," << fmt(t) << ',' << fmt(f) << ',' << cfg.seed << ",0\n";
    }
    j["curve"] = std::move(rows);
    j["violation"] = {{"t0", cert.t0},     {"tmid", cert.tmid}, {"t1", cert.t1},
                      {"f0", cert.f0},     {"fmid", cert.fmid}, {"f1", cert.f1},
                      {"margin", cert.margin}};
    os << "violation_f," << fmt(cert.t0) << ',' << fmt(cert.f0) << ',' << cfg.seed << ",0\n";
    os << "violation_f," << fmt(cert.tmid) << ',' << fmt(cert.fmid) << ',' << cfg.seed << ",0\n";
    os << "violation_f," << fmt(cert.t1) << ',' << fmt(cert.f1) << ',' << cfg.seed << ",0\n";
    os << "violation_margin,," << fmt(cert.margin) << ',' << cfg.seed << ",0\n";
    emit(cfg, j, os.str());
    return 0;
}

std::vector<SymMatrix> load_matrices(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open matrices file: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid JSON in " + path + ": " + e.what());
    }
    std::vector<SymMatrix> ms;
    try {
        for (const auto& mj : j.at("matrices")) {
            std::vector<Vector> rows;
            for (const auto& rj : mj) rows.push_back(rj.get<Vector>());
            ms.push_back(SymMatrix::from_rows(rows));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("matrices file " + path + ": " + e.what());
    }
    if (ms.empty()) throw IoError("matrices file " + path + ": no matrices");
    return ms;
}

int run_mixed_disc(const RunConfig& cfg) {
    const std::vector<SymMatrix> ms = load_matrices(*cfg.matrices_path);
    const int k = ms[0].order();
    const bool square_tuple = static_cast<int>(ms.size()) == k;
    if (!square_tuple && cfg.xs.empty())
        throw std::invalid_argument(
            "mixed-disc: need exactly k matrices of order k, or --x for the expansion check");

    std::optional<double> value;
    if (square_tuple) value = mixed_discriminant(ms).value;
    std::optional<double> residual;
    if (!cfg.xs.empty()) residual = det_expansion_check(ms, cfg.xs);

    ordered_json j;
    j["command"] = "mixed-disc";
    j["k"] = k;
    j["count"] = ms.size();
    if (value) j["value"] = *value;
    if (residual) j["residual"] = *residual;
    j["seed"] = cfg.seed;
    j["samples"] = 0;
    std::ostringstream os;
    os << "command,k,count,value,residual,seed,samples\n";
    os << "mixed-disc," << k << ',' << ms.size() << ',' << (value ? fmt(*value) : "") << ','
       << (residual ? fmt(*residual) : "") << ',' << cfg.seed << ",0\n";
    emit(cfg, j, os.str());
    return 0;
}

int run_density_check(const RunConfig& cfg) {
    ordered_json j;
    j["command"] = "density-check";
    j["points"] = cfg.points;
    j["seed"] = cfg.seed;
    j["samples"] = 0;
    auto rows = ordered_json::array();
    std::ostringstream os;
    os << "x,abs_error,points,seed,samples\n";
    for (double x : cfg.xs) {
        const double err = density_identity_check(x, cfg.points);
        ordered_json r;
        r["x"] = x;
        r["abs_error"] = err;
        rows.push_back(std::move(r));
        os << fmt(x) << ',' << fmt(err) << ',' << cfg.points << ',' << cfg.seed << ",0\n";
    }
    j["rows"] = std::move(rows);
    emit(cfg, j, os.str());
    return 0;
}

}  // namespace

SubspaceSpec load_subspace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open subspace file: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid JSON in " + path + ": " + e.what());
    }
    int n = 0;
    std::string given;
    std::vector<Vector> rows;
    try {
        n = j.at("n").get<int>();
        given = j.at("given_as").get<std::string>();
        for (const auto& rj : j.at("rows")) rows.push_back(rj.get<Vector>());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("subspace file " + path + ": " + e.what());
    }
    if (given != "H" && given != "complement")
        throw IoError("subspace file " + path + ": given_as must be \"H\" or \"complement\"");
    return make_subspace(n, given == "H" ? GivenAs::basis_of_H : GivenAs::basis_of_complement,
                         std::move(rows));
}

RunConfig parse_args(const std::vector<std::string>& args) {
    RunConfig cfg;
    CLI::App app{"Section volumes of dilated cross-polytopes: Monte Carlo estimators, "
                 "exact oracles, and convexity checks"};
    app.require_subcommand(1);

    const auto add_output = [&](CLI::App* sub) {
        sub->add_option("--format", [&cfg](const std::vector<std::string>& v) {
               cfg.format = v[0] == "csv" ? OutputFormat::csv : OutputFormat::json;
               return true;
           },
           "Output format (json|csv)")
            ->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--output", cfg.output_path, "Write results to this file instead of stdout");
    };
    const auto add_mc = [&](CLI::App* sub) {
        sub->add_option("--samples", cfg.samples, "Monte Carlo samples");
        sub->add_option("--batches", cfg.batches, "Batches for batch-means stderr");
        sub->add_option("--seed", cfg.seed, "Master RNG seed");
        sub->add_flag("--median-of-means", cfg.median_of_means,
                      "Aggregate batches by median instead of mean");
    };
    const auto add_dilation = [&](CLI::App* sub) {
        auto* oa = sub->add_option("--a", cfg.a, "Dilation scales a_1,...,a_n")->delimiter(',');
        auto* ot = sub->add_option("--t", cfg.t, "Log dilations t_1,...,t_n (a_i = e^t_i)")
                       ->delimiter(',');
        oa->excludes(ot);
        ot->excludes(oa);
    };

    auto* est = app.add_subcommand("estimate", "Monte Carlo section volume via one of the two formulas");
    est->add_option("--subspace", cfg.subspace_path, "Subspace JSON file")->required();
    est->add_option("--mode", cfg.mode, "Which formula: codim|dim")
        ->check(CLI::IsMember({"codim", "dim"}));
    add_dilation(est);
    add_mc(est);
    add_output(est);

    auto* ora = app.add_subcommand("oracle", "Exact or hit-or-miss reference volume");
    ora->add_option("--subspace", cfg.subspace_path, "Subspace JSON file")->required();
    add_dilation(ora);
    add_mc(ora);
    add_output(ora);

    auto* scan = app.add_subcommand("scan", "Random midpoint log-concavity scan");
    scan->add_option("--subspace", cfg.subspace_path, "Subspace JSON file")->required();
    scan->add_option("--box", cfg.box, "Half-width of the sampled t box");
    scan->add_option("--triples", cfg.triples, "Number of random (t0, t1) pairs");
    scan->add_option("--mode", cfg.mode, "Which formula: codim|dim")
        ->check(CLI::IsMember({"codim", "dim"}));
    add_mc(scan);
    add_output(scan);

    auto* ce = app.add_subcommand("counterexample",
                                  "Parallelogram measure whose dilation profile is not log-concave");
    ce->add_option("--grid", cfg.grid, "Curve grid lo:hi:count");
    add_output(ce);

    auto* md = app.add_subcommand("mixed-disc", "Mixed discriminant and determinant expansion check");
    md->add_option("--matrices", cfg.matrices_path, "JSON file with {\"matrices\": [...]}")
        ->required();
    md->add_option("--x", cfg.xs, "Coefficients for the expansion residual check")->delimiter(',');
    add_output(md);

    auto* dc = app.add_subcommand("density-check",
                                  "Quadrature check of the exponential Gaussian-mixture identity");
    dc->add_option("--x", cfg.xs, "Evaluation points")->delimiter(',');
    dc->add_option("--points", cfg.points, "Quadrature point budget (>= 100)");
    add_output(dc);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        throw HelpRequested{app.help()};
    } catch (const CLI::CallForAllHelp& e) {
        throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (est->parsed()) cfg.command = Command::estimate;
    else if (ora->parsed()) cfg.command = Command::oracle;
    else if (scan->parsed()) cfg.command = Command::scan;
    else if (ce->parsed()) cfg.command = Command::counterexample;
    else if (md->parsed()) cfg.command = Command::mixed_disc;
    else cfg.command = Command::density_check;

    if (cfg.command == Command::estimate || cfg.command == Command::oracle) {
        if (cfg.a.empty() && cfg.t.empty())
            throw UsageError("one of --a or --t is required");
        for (double v : cfg.a)
            if (!(v > 0.0) || !std::isfinite(v))
                throw UsageError("dilation entries must be positive");
        for (double v : cfg.t)
            if (!std::isfinite(v)) throw UsageError("--t entries must be finite");
    }
    if (cfg.command == Command::estimate || cfg.command == Command::oracle ||
        cfg.command == Command::scan) {
        if (cfg.batches < 2) throw UsageError("--batches must be at least 2");
        if (cfg.samples < static_cast<std::uint64_t>(cfg.batches))
            throw UsageError("--samples must be at least --batches");
        if (cfg.samples % static_cast<std::uint64_t>(cfg.batches) != 0)
            throw UsageError("--batches must divide --samples");
    }
    if (cfg.command == Command::scan) {
        if (cfg.triples < 1) throw UsageError("--triples must be at least 1");
        if (!(cfg.box > 0.0)) throw UsageError("--box must be positive");
    }
    if (cfg.command == Command::counterexample) parse_grid(cfg.grid);  // validates
    if (cfg.command == Command::density_check) {
        if (cfg.points < 100) throw UsageError("--points must be at least 100");
        if (cfg.xs.empty()) cfg.xs = {0.0, 1.0, 3.0};
    }
    return cfg;
}

int run(const RunConfig& cfg) {
    switch (cfg.command) {
        case Command::estimate: return run_estimate(cfg);
        case Command::oracle: return run_oracle(cfg);
        case Command::scan: return run_scan(cfg);
        case Command::counterexample: return run_counterexample(cfg);
        case Command::mixed_disc: return run_mixed_disc(cfg);
        case Command::density_check: return run_density_check(cfg);
    }
    return 1;
}

int main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        return run(parse_args(args));
    } catch (const HelpRequested& h) {
        std::cout << h.text;
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::range_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace xsec::cli
