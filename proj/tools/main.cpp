// Command-line front end: batch denoising, oracle validation reports, and
// synthetic-data generation, driven by a JSON config.
//
// Exit codes: 0 success; 1 failing validation case; 2 malformed input or
// config; 3 evaluation failure under --strict.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tweedie/tweedie.hpp"

using json = nlohmann::json;
using namespace tweedie;

namespace {

struct malformed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw malformed("cannot open input file: " + path);
    Csv csv;
    std::string line;
    if (!std::getline(in, line)) throw malformed("empty input file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) csv.header.push_back(cell);
    if (csv.header.empty()) throw malformed("missing header row: " + path);
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream rs(line);
        while (std::getline(rs, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw malformed(path + ":" + std::to_string(lineno) +
                                ": non-numeric cell '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != csv.header.size())
            throw malformed(path + ":" + std::to_string(lineno) + ": ragged row");
        csv.rows.push_back(std::move(row));
    }
    return csv;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw malformed("cannot open output file: " + path);
    for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

double need_num(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number())
        throw malformed("missing numeric field '" + key + "'");
    return j[key].get<double>();
}

NoiseSpec parse_noise(const json& j) {
    if (!j.contains("family") || !j["family"].is_string())
        throw malformed("noise.family missing");
    const std::string fam = j["family"];
    const double mu = j.value("mu", 0.0);
    if (fam == "gaussian") return NoiseSpec::gaussian(mu, need_num(j, "sigma"));
    if (fam == "generalized_laplace")
        return NoiseSpec::generalized_laplace(mu, need_num(j, "b"), need_num(j, "lambda"));
    if (fam == "laplace") return NoiseSpec::laplace(mu, need_num(j, "b"));
    if (fam == "asymmetric_laplace")
        return NoiseSpec::asymmetric_laplace(mu, need_num(j, "b_minus"), need_num(j, "b_plus"));
    if (fam == "logistic") return NoiseSpec::logistic(mu, need_num(j, "s"));
    if (fam == "gumbel") return NoiseSpec::gumbel(mu, need_num(j, "beta"));
    if (fam == "cauchy") return NoiseSpec::cauchy(mu, need_num(j, "gamma"));
    if (fam == "hyperbolic_secant") return NoiseSpec::hyperbolic_secant(mu, need_num(j, "s"));
    if (fam == "gamma") return NoiseSpec::gamma(need_num(j, "alpha"), need_num(j, "theta"));
    if (fam == "noncentral_chisq")
        return NoiseSpec::noncentral_chisq(need_num(j, "nu"), need_num(j, "delta"));
    if (fam == "inverse_gaussian")
        return NoiseSpec::inverse_gaussian(need_num(j, "mu"), need_num(j, "lambda"));
    if (fam == "product_laplace")
        return NoiseSpec::product_laplace(need_num(j, "b"),
                                          static_cast<int>(j.value("d", 1.0)));
    throw malformed("unknown noise family '" + fam + "'");
}

VectorXd parse_point(const json& j) {
    if (j.is_number()) {
        VectorXd v(1);
        v << j.get<double>();
        return v;
    }
    if (j.is_array()) {
        VectorXd v(j.size());
        for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
        return v;
    }
    throw malformed("expected number or array of numbers");
}

struct ParsedPrior {
    std::optional<PriorSpec> prior;
    std::optional<std::string> samples_file;
    std::optional<HeteroJointSpec> joint;
};

ParsedPrior parse_prior(const json& j) {
    if (!j.contains("type") || !j["type"].is_string()) throw malformed("prior.type missing");
    const std::string type = j["type"];
    ParsedPrior out;
    if (type == "atomic") {
        std::vector<Atom> atoms;
        for (const auto& a : j.at("atoms"))
            atoms.push_back({parse_point(a.at("x")), a.at("w").get<double>()});
        out.prior = PriorSpec::atomic_vec(std::move(atoms));
        return out;
    }
    if (type == "gaussian_mixture") {
        std::vector<std::tuple<double, double, double>> comps;
        for (const auto& c : j.at("components"))
            comps.emplace_back(c.at("mean").get<double>(), c.at("var").get<double>(),
                               c.at("w").get<double>());
        out.prior = PriorSpec::gaussian_mixture(comps);
        return out;
    }
    if (type == "samples") {
        out.samples_file = j.at("file").get<std::string>();
        return out;
    }
    if (type == "hetero_joint") {
        std::vector<std::tuple<double, double, double>> rows;
        for (const auto& a : j.at("atoms"))
            rows.emplace_back(a.at("x").get<double>(), a.at("sigma2").get<double>(),
                              a.at("w").get<double>());
        out.joint = HeteroJointSpec::scalar(rows);
        return out;
    }
    throw malformed("unknown prior type '" + type + "'");
}

FunctionalSpec parse_functional(const json& j) {
    std::string target;
    if (j.is_string())
        target = j.get<std::string>();
    else if (j.is_object() && j.contains("target"))
        target = j["target"].get<std::string>();
    else
        throw malformed("functional must be a string or an object with 'target'");
    auto num = [&](const char* key) {
        if (!j.is_object()) throw malformed(std::string("functional '") + target +
                                            "' needs parameter '" + key + "'");
        return need_num(j, key);
    };
    if (target == "mean") return FunctionalSpec::mean();
    if (target == "second_moment") return FunctionalSpec::second_moment();
    if (target == "variance") return FunctionalSpec::variance();
    if (target == "raw_moment") return FunctionalSpec::raw_moment(static_cast<int>(num("k")));
    if (target == "centered_moment")
        return FunctionalSpec::centered_moment(static_cast<int>(num("k")));
    if (target == "mgf") {
        if (j.at("t").is_array()) return FunctionalSpec::mgf_vec(parse_point(j["t"]));
        return FunctionalSpec::mgf(num("t"));
    }
    if (target == "cdf") return FunctionalSpec::cdf(num("a"));
    if (target == "squared_risk") return FunctionalSpec::squared_risk(num("a"));
    if (target == "even_risk")
        return FunctionalSpec::even_risk(num("a"), static_cast<int>(num("m")));
    if (target == "hinge") return FunctionalSpec::hinge(num("a"));
    if (target == "pinball") return FunctionalSpec::pinball(num("a"), num("tau"));
    if (target == "absolute_risk") return FunctionalSpec::absolute_risk(num("a"));
    throw malformed("unknown functional '" + target + "'");
}

// CSV-safe column name for a functional.
std::string csv_name(const FunctionalSpec& f) {
    auto num = [](double v) { return std::string(fmt(v)); };
    switch (f.target) {
        case Target::kMean: return "mean";
        case Target::kSecondMoment: return "second_moment";
        case Target::kVariance: return "variance";
        case Target::kRawMoment: return "raw_moment_k" + std::to_string(f.k);
        case Target::kCenteredMoment: return "centered_moment_k" + std::to_string(f.k);
        case Target::kMgf: {
            std::string s = "mgf_t";
            for (int i = 0; i < f.t.size(); ++i) s += (i ? "_" : "") + num(f.t[i]);
            return s;
        }
        case Target::kCdf: return "cdf_a" + num(f.a);
        case Target::kSquaredRisk: return "squared_risk_a" + num(f.a);
        case Target::kEvenRisk:
            return "even_risk_a" + num(f.a) + "_m" + std::to_string(f.m);
        case Target::kHingeLoss: return "hinge_a" + num(f.a);
        case Target::kPinballLoss: return "pinball_a" + num(f.a) + "_tau" + num(f.tau);
        case Target::kAbsoluteRisk: return "absolute_risk_a" + num(f.a);
    }
    return "functional";
}

struct RunConfig {
    std::string command;
    json raw;
    std::optional<NoiseSpec> noise;
    ParsedPrior prior;
    std::vector<FunctionalSpec> functionals;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    long n = 0;
    std::string out = "out.csv";
    bool strict = false;
    bool quiet = false;
};

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw malformed("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw malformed(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    cfg.raw = j;
    if (!j.contains("command") || !j["command"].is_string())
        throw malformed("config.command missing");
    cfg.command = j["command"];
    if (j.contains("noise")) {
        const std::string fam = j["noise"].value("family", "");
        if (fam != "hetero_gaussian") cfg.noise = validate_noise(parse_noise(j["noise"]));
    }
    if (j.contains("prior")) cfg.prior = parse_prior(j["prior"]);
    const bool has_prior = cfg.prior.prior.has_value() || cfg.prior.joint.has_value();
    if (has_prior && cfg.prior.samples_file)
        throw malformed("exactly one of prior spec and sample file may be present");
    if (j.contains("functionals"))
        for (const auto& f : j["functionals"]) cfg.functionals.push_back(parse_functional(f));
    cfg.tol = j.value("tol", 1e-6);
    cfg.seed = j.value("seed", 0ULL);
    cfg.n = static_cast<long>(j.value("n", 0.0));
    cfg.out = j.value("out", std::string("out.csv"));
    return cfg;
}

std::vector<double> read_samples(const std::string& path) {
    Csv csv = read_csv(path);
    int col = csv.column("y");
    if (col < 0) col = 0;
    std::vector<double> out;
    out.reserve(csv.rows.size());
    for (const auto& r : csv.rows) out.push_back(r[col]);
    return out;
}

// ---------------------------------------------------------------------------
// denoise
// ---------------------------------------------------------------------------

struct RowEval {
    std::vector<double> values;
    double f_y = 0.0;
    double err = 0.0;
    bool converged = true;
};

EvalResult eval_gauss_target(double s2, const DensityModel& model, double y,
                             const FunctionalSpec& f, double tol) {
    switch (f.target) {
        case Target::kCdf:
            return gauss_cdf(s2, model, y, f.a, 60, default_n_schedule(), tol);
        case Target::kHingeLoss:
            return gauss_hinge_abs(s2, model, y, f.a, LossKind::kHinge, 60,
                                   default_n_schedule(), tol);
        case Target::kAbsoluteRisk:
            return gauss_hinge_abs(s2, model, y, f.a, LossKind::kAbsolute, 60,
                                   default_n_schedule(), tol);
        default:
            return gauss_functional(s2, model, y, f);
    }
}

RowEval evaluate_row_1d(const RunConfig& cfg, const DensityModel& model, double y) {
    RowEval out;
    out.f_y = model(y);
    const auto& noise = *cfg.noise;
    for (const auto& f : cfg.functionals) {
        validate_functional(f, noise);
        EvalResult r;
        if (noise.family == NoiseFamily::kProductLaplace) {
            r = lm_functional_1d(noise.b(), model, y, f, cfg.tol);
        } else if (noise.family == NoiseFamily::kGaussian) {
            r = eval_gauss_target(noise.sigma() * noise.sigma(), model, y, f, cfg.tol);
        } else {
            r = posterior_mean(noise, model, y, cfg.tol);
        }
        out.values.push_back(r.scalar());
        out.err = std::max(out.err, r.quadrature_error_estimate);
        out.converged = out.converged && r.converged;
    }
    return out;
}

int cmd_denoise(const RunConfig& cfg) {
    if (cfg.functionals.empty()) throw malformed("denoise needs a non-empty functionals list");
    const json& j = cfg.raw;

    // Hetero mode: exact joint + per-row sigma column.
    if (cfg.prior.joint) {
        if (!j.contains("data_file")) throw malformed("hetero denoise needs data_file");
        Csv csv = read_csv(j["data_file"].get<std::string>());
        const int ycol = csv.column("y");
        const int scol = csv.column("sigma");
        if (ycol < 0 || scol < 0) throw malformed("hetero input needs 'y' and 'sigma' columns");
        std::vector<std::string> header{"y", "sigma"};
        for (const auto& f : cfg.functionals) header.push_back(csv_name(f));
        header.insert(header.end(), {"f_y", "err_est", "converged"});
        std::vector<std::vector<std::string>> rows;
        bool any_bad = false;
        for (const auto& row : csv.rows) {
            const double y = row[ycol], sigma = row[scol];
            std::vector<std::string> cells{fmt(y), fmt(sigma)};
            try {
                auto [model, prior] = hetero_condition(*cfg.prior.joint, sigma * sigma);
                RowEval ev;
                ev.f_y = model(y);
                for (const auto& f : cfg.functionals) {
                    const EvalResult r =
                        eval_gauss_target(sigma * sigma, model, y, f, cfg.tol);
                    ev.values.push_back(r.scalar());
                    ev.err = std::max(ev.err, r.quadrature_error_estimate);
                    ev.converged = ev.converged && r.converged;
                }
                for (double v : ev.values) cells.push_back(fmt(v));
                cells.push_back(fmt(ev.f_y));
                cells.push_back(fmt(ev.err));
                cells.push_back(ev.converged ? "1" : "0");
                any_bad = any_bad || !ev.converged;
            } catch (const std::exception&) {
                for (size_t i = 0; i < cfg.functionals.size(); ++i) cells.push_back("nan");
                cells.insert(cells.end(), {"nan", "nan", "0"});
                any_bad = true;
            }
            rows.push_back(std::move(cells));
        }
        write_csv(cfg.out, header, rows);
        if (!cfg.quiet) std::cout << "wrote " << rows.size() << " rows to " << cfg.out << "\n";
        return (cfg.strict && any_bad) ? 3 : 0;
    }

    if (!cfg.noise) throw malformed("denoise needs a noise spec");

    // Build the density model: exact prior or KDE plug-in from samples.
    std::optional<DensityModel> model;
    if (cfg.prior.samples_file) {
        auto samples = read_samples(*cfg.prior.samples_file);
        BandwidthRule rule = BandwidthRule::silverman();
        if (j.contains("kde") && j["kde"].contains("bandwidth") &&
            j["kde"]["bandwidth"].is_number())
            rule = BandwidthRule::fixed(j["kde"]["bandwidth"].get<double>());
        model = kde_fit(samples, rule);
    } else if (cfg.prior.prior) {
        model = exact_density(*cfg.prior.prior, *cfg.noise);
    } else {
        throw malformed("denoise needs a prior spec or a samples file");
    }

    const int d = model->dim();
    std::vector<std::vector<double>> points;  // row-major, d columns
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (d != 1) throw malformed("grid mode is univariate");
        const double lo = need_num(g, "lo"), hi = need_num(g, "hi");
        const int n = static_cast<int>(need_num(g, "n"));
        if (n < 1) throw malformed("grid.n must be >= 1");
        for (int i = 0; i < n; ++i)
            points.push_back({n == 1 ? lo : lo + (hi - lo) * i / (n - 1)});
    } else if (j.contains("data_file")) {
        Csv csv = read_csv(j["data_file"].get<std::string>());
        if (d == 1) {
            const int ycol = csv.column("y");
            if (ycol < 0) throw malformed("input needs a 'y' column");
            for (const auto& row : csv.rows) points.push_back({row[ycol]});
        } else {
            std::vector<int> cols;
            for (int k = 1; k <= d; ++k) {
                const int c = csv.column("y" + std::to_string(k));
                if (c < 0) throw malformed("input needs columns y1..y" + std::to_string(d));
                cols.push_back(c);
            }
            for (const auto& row : csv.rows) {
                std::vector<double> pt;
                for (int c : cols) pt.push_back(row[c]);
                points.push_back(std::move(pt));
            }
        }
    } else {
        throw malformed("denoise needs grid or data_file");
    }

    std::vector<std::string> header;
    for (int k = 0; k < d; ++k) header.push_back(d == 1 ? "y" : "y" + std::to_string(k + 1));
    for (const auto& f : cfg.functionals) {
        const std::string base = csv_name(f);
        if (d > 1 && f.target == Target::kMean)
            for (int k = 1; k <= d; ++k) header.push_back(base + "_" + std::to_string(k));
        else
            header.push_back(base);
    }
    header.insert(header.end(), {"f_y", "err_est", "converged"});

    std::vector<std::vector<std::string>> rows;
    bool any_bad = false;
    for (const auto& pt : points) {
        std::vector<std::string> cells;
        for (double v : pt) cells.push_back(fmt(v));
        try {
            if (d == 1) {
                const RowEval ev = evaluate_row_1d(cfg, *model, pt[0]);
                for (double v : ev.values) cells.push_back(fmt(v));
                cells.push_back(fmt(ev.f_y));
                cells.push_back(fmt(ev.err));
                cells.push_back(ev.converged ? "1" : "0");
                any_bad = any_bad || !ev.converged;
            } else {
                VectorXd y(d);
                for (int k = 0; k < d; ++k) y[k] = pt[k];
                double err = 0.0;
                for (const auto& f : cfg.functionals) {
                    validate_functional(f, *cfg.noise);
                    if (f.target == Target::kMean) {
                        const auto r = lm_mean_vec(cfg.noise->b(), *model, y, cfg.tol);
                        for (int k = 0; k < d; ++k) cells.push_back(fmt(r.vec()(k)));
                        err = std::max(err, r.quadrature_error_estimate);
                    } else if (f.target == Target::kMgf) {
                        const auto r = lm_mgf(cfg.noise->b(), *model, y, f.t, cfg.tol);
                        cells.push_back(fmt(r.scalar()));
                        err = std::max(err, r.quadrature_error_estimate);
                    } else {
                        throw unsupported("multivariate denoise supports mean and mgf");
                    }
                }
                cells.push_back(fmt(model->at(y)));
                cells.push_back(fmt(err));
                cells.push_back("1");
            }
        } catch (const malformed&) {
            throw;
        } catch (const std::exception&) {
            while (cells.size() + 3 < header.size()) cells.push_back("nan");
            cells.insert(cells.end(), {"nan", "nan", "0"});
            any_bad = true;
        }
        rows.push_back(std::move(cells));
    }
    write_csv(cfg.out, header, rows);
    if (!cfg.quiet) std::cout << "wrote " << rows.size() << " rows to " << cfg.out << "\n";
    return (cfg.strict && any_bad) ? 3 : 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

std::vector<ValidationCase> parse_suite_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw malformed("cannot open suite file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw malformed(std::string("suite file is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw malformed("suite file must be a JSON array of cases");
    std::vector<ValidationCase> suite;
    for (const auto& cj : j) {
        try {
            ValidationCase c;
            c.label = cj.value("label", std::string("case"));
            c.fspec = parse_functional(cj.at("functional"));
            for (const auto& y : cj.at("y_grid")) c.y_grid.push_back(y.get<double>());
            c.tol = cj.value("tol", 1e-6);
            if (cj.contains("joint")) {
                std::vector<std::tuple<double, double, double>> rows;
                for (const auto& a : cj["joint"])
                    rows.emplace_back(a.at("x").get<double>(), a.at("sigma2").get<double>(),
                                      a.at("w").get<double>());
                c.joint = HeteroJointSpec::scalar(rows);
                c.hetero_sigma_sq = need_num(cj, "sigma2");
                c.prior = PriorSpec::atomic({{0.0, 1.0}});  // unused in hetero mode
                c.noise = NoiseSpec::gaussian(0.0, std::sqrt(c.hetero_sigma_sq));
            } else {
                c.noise = validate_noise(parse_noise(cj.at("noise")));
                ParsedPrior p = parse_prior(cj.at("prior"));
                if (!p.prior) throw malformed("suite cases need an exact prior");
                c.prior = *p.prior;
            }
            suite.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw malformed(std::string("malformed suite case: ") + e.what());
        }
    }
    return suite;
}

int cmd_validate(const RunConfig& cfg) {
    const json& j = cfg.raw;
    std::vector<ValidationCase> suite;
    std::string suite_name;
    if (j.contains("suite") && j["suite"].is_string()) {
        suite_name = j["suite"].get<std::string>();
        try {
            suite = builtin_suite(suite_name);
        } catch (const domain_error& e) {
            throw malformed(e.what());
        }
    } else if (j.contains("suite_file")) {
        suite_name = j["suite_file"].get<std::string>();
        suite = parse_suite_file(suite_name);
    } else {
        throw malformed("validate needs 'suite' (built-in name) or 'suite_file'");
    }

    OracleReport report = run_validation(suite, suite_name);
    report.seed = cfg.seed;

    json out;
    out["suite"] = report.suite;
    out["seed"] = report.seed;
    out["cases"] = json::array();
    for (const auto& r : report.records) {
        json c{{"family", r.family},   {"functional", r.functional},
               {"y", r.y},             {"formula", r.formula},
               {"oracle", r.oracle},   {"abs_error", r.abs_error},
               {"tol", r.tol},         {"pass", r.pass}};
        if (!r.message.empty()) c["error"] = r.message;
        out["cases"].push_back(std::move(c));
    }
    if (report.max_abs_error) out["max_abs_error"] = *report.max_abs_error;
    const std::string report_path = j.value("out", std::string("report.json"));
    std::ofstream jf(report_path);
    if (!jf) throw malformed("cannot open report output: " + report_path);
    jf << out.dump(2) << "\n";

    const std::string summary_path = j.value("out_summary", std::string("summary.csv"));
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : report.records)
        rows.push_back({r.family, r.functional, fmt(r.y), fmt(r.formula), fmt(r.oracle),
                        fmt(r.abs_error), fmt(r.tol), r.pass ? "1" : "0"});
    write_csv(summary_path, {"family", "functional", "y", "formula", "oracle", "abs_error",
                             "tol", "pass"},
              rows);

    std::size_t failed = 0;
    for (const auto& r : report.records) failed += !r.pass;
    if (!cfg.quiet)
        std::cout << "suite " << report.suite << ": " << report.records.size() - failed << "/"
                  << report.records.size() << " cases passed"
                  << (report.max_abs_error
                          ? std::string(", max_abs_error=") + fmt(*report.max_abs_error)
                          : std::string())
                  << "\n";
    return report.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg) {
    if (cfg.n < 1) throw malformed("simulate needs n >= 1");
    std::vector<std::vector<std::string>> rows;
    if (cfg.prior.joint) {
        Rng rng(cfg.seed);
        for (long i = 0; i < cfg.n; ++i) {
            const double u = rng.uniform();
            double cum = 0.0;
            const HeteroAtom* pick = &cfg.prior.joint->atoms.back();
            for (const auto& a : cfg.prior.joint->atoms) {
                cum += a.weight;
                if (u <= cum) {
                    pick = &a;
                    break;
                }
            }
            const double sigma = std::sqrt(pick->sigma(0, 0));
            const double x = pick->x[0];
            const double y = x + sigma * rng.normal();
            rows.push_back({fmt(x), fmt(y), fmt(sigma)});
        }
        write_csv(cfg.out, {"x", "y", "sigma"}, rows);
    } else {
        if (!cfg.prior.prior || !cfg.noise)
            throw malformed("simulate needs an exact prior and noise");
        if (cfg.prior.prior->dim == 1) {
            auto draws = oracle::sample_joint(*cfg.prior.prior, *cfg.noise, cfg.n, cfg.seed);
            for (const auto& [x, y] : draws) rows.push_back({fmt(x), fmt(y)});
            write_csv(cfg.out, {"x", "y"}, rows);
        } else {
            auto draws = oracle::sample_joint_vec(*cfg.prior.prior, *cfg.noise, cfg.n, cfg.seed);
            const int d = cfg.prior.prior->dim;
            std::vector<std::string> header;
            for (int k = 1; k <= d; ++k) header.push_back("x" + std::to_string(k));
            for (int k = 1; k <= d; ++k) header.push_back("y" + std::to_string(k));
            for (const auto& dr : draws) {
                std::vector<std::string> row;
                for (int k = 0; k < d; ++k) row.push_back(fmt(dr.x[k]));
                for (int k = 0; k < d; ++k) row.push_back(fmt(dr.y[k]));
                rows.push_back(std::move(row));
            }
            write_csv(cfg.out, header, rows);
        }
    }
    if (!cfg.quiet) std::cout << "wrote " << rows.size() << " draws to " << cfg.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tweedie-representation denoising toolkit"};
    std::string config_path;
    bool strict = false, quiet = false;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_flag("--strict", strict, "exit 3 when any row fails to converge");
    app.add_flag("--quiet", quiet, "suppress progress output");
    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = parse_config(config_path);
        cfg.strict = strict;
        cfg.quiet = quiet;
        if (cfg.command == "denoise") return cmd_denoise(cfg);
        if (cfg.command == "validate") return cmd_validate(cfg);
        if (cfg.command == "simulate") return cmd_simulate(cfg);
        std::cerr << "unknown command '" << cfg.command << "'\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
