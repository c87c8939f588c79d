// henon_cli: batch front end for the fractional Henon system.
//
//   henon_cli <solve|sweep|identity|bubble|extension-check> CONFIG.json --out DIR
//
// Exit codes: 0 ok, 1 bad config, 2 non-convergence or failed invariant,
// 3 numerical failure. HENON_THREADS caps the worker count of cold sweeps.
//
// Config keys (JSON object; only "s" is required everywhere):
//   s            fractional order
//   alpha        Henon weight exponent              default 0
//   modes        eigenbasis size M                  default 256
//   grid         physical samples G                 default 4*modes
//   p, q         exponents (solve needs p)          default q = 2
//   p_values     increasing list of p (sweep)
//   warm_start   seed each sweep point with the previous one   default true
//   threads      cold-sweep workers                 default 1
//   solver       {max_iters, tol_grad, tol_quotient, initial_step, backtrack,
//                 armijo, memory, init_center, init_width,
//                 positivity: "abs_project"|"none", allow_critical}
//   sobolev      {eps0, count, terms}               sweep and bubble
//   estimate     bubble: also extrapolate S-hat      default false
//   eps          bubble: list of eps values          default 2e-3 halved 4 times
//   pairs        identity: [[p, q], ...]             default [[2,2],[2.5,1.5],[3,1.5]]
//   alphas       identity: list of alpha             default [0, 1]
//   fields, seed extension-check: random fields for the isometry   default 20, 1

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "henon/asymptotics.hpp"
#include "henon/bubbles.hpp"
#include "henon/extension.hpp"
#include "henon/solver.hpp"

#ifndef HENON_VERSION
#define HENON_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace henon;

namespace {

enum Exit : int { ok = 0, bad_config = 1, not_converged = 2, numerical = 3 };

struct InvariantFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- formatting

std::string fmt(double x)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

std::string fmt(int x)
{
    return std::to_string(x);
}

std::string fmt(bool x)
{
    return x ? "true" : "false";
}

json num(double x)
{
    // JSON has no NaN; missing diagnostics become null
    return std::isfinite(x) ? json(x) : json(nullptr);
}

std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string sha256_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 14];
    while (in) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i) {
        static const char* digits = "0123456789abcdef";
        hex << digits[md[i] >> 4] << digits[md[i] & 15];
    }
    return hex.str();
}

// write-then-rename so a reader never sees a half-written file
void write_atomic(const fs::path& path, const std::string& body)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << body;
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------- config

class Config {
public:
    explicit Config(json doc) : doc_(std::move(doc))
    {
        if (!doc_.is_object()) {
            throw ConfigError("config must be a JSON object");
        }
        static const std::set<std::string> known{"s", "alpha", "modes", "grid", "p", "q", "p_values",
                                                 "warm_start", "threads", "solver", "sobolev", "estimate",
                                                 "eps", "pairs", "alphas", "fields", "seed"};
        for (const auto& [key, _] : doc_.items()) {
            if (!known.count(key)) {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
        if (!doc_.contains("s")) {
            throw ConfigError("missing required key 's'");
        }
    }

    template <class T>
    T get(const std::string& key, T fallback) const
    {
        return doc_.contains(key) ? typed<T>(doc_, key) : fallback;
    }

    template <class T>
    T need(const std::string& key) const
    {
        if (!doc_.contains(key)) {
            throw ConfigError("missing required key '" + key + "'");
        }
        return typed<T>(doc_, key);
    }

    const json& raw() const { return doc_; }

    ProblemConfig problem() const
    {
        const auto modes = get<std::size_t>("modes", 256);
        return ProblemConfig::make(need<double>("s"), get<double>("alpha", 0.0), modes,
                                   get<std::size_t>("grid", 4 * modes));
    }

    SolverOptions solver() const
    {
        SolverOptions o;
        if (doc_.contains("solver")) {
            const json& j = doc_.at("solver");
            if (!j.is_object()) {
                throw ConfigError("'solver' must be an object");
            }
            static const std::set<std::string> known{"max_iters", "tol_grad", "tol_quotient", "initial_step",
                                                     "backtrack", "armijo", "memory", "init_center",
                                                     "init_width", "positivity", "allow_critical"};
            for (const auto& [key, _] : j.items()) {
                if (!known.count(key)) {
                    throw ConfigError("unknown solver key '" + key + "'");
                }
            }
            o.max_iters = j.value("max_iters", o.max_iters);
            o.tol_grad = j.value("tol_grad", o.tol_grad);
            o.tol_quotient = j.value("tol_quotient", o.tol_quotient);
            o.initial_step = j.value("initial_step", o.initial_step);
            o.backtrack = j.value("backtrack", o.backtrack);
            o.armijo = j.value("armijo", o.armijo);
            o.memory = j.value("memory", o.memory);
            o.init_center = j.value("init_center", o.init_center);
            o.init_width = j.value("init_width", o.init_width);
            o.allow_critical = j.value("allow_critical", o.allow_critical);
            const std::string pos = j.value("positivity", std::string("abs_project"));
            if (pos == "abs_project") {
                o.positivity = PositivityMode::abs_project;
            }
            else if (pos == "none") {
                o.positivity = PositivityMode::none;
            }
            else {
                throw ConfigError("solver.positivity must be \"abs_project\" or \"none\"");
            }
        }
        o.validate();
        return o;
    }

    struct Sobolev {
        double eps0 = 2e-3;
        int count = 7;
        int terms = 4;
    };

    Sobolev sobolev() const
    {
        Sobolev sb;
        if (doc_.contains("sobolev")) {
            const json& j = doc_.at("sobolev");
            sb.eps0 = j.value("eps0", sb.eps0);
            sb.count = j.value("count", sb.count);
            sb.terms = j.value("terms", sb.terms);
        }
        return sb;
    }

private:
    template <class T>
    static T typed(const json& j, const std::string& key)
    {
        try {
            return j.at(key).get<T>();
        }
        catch (const json::exception&) {
            throw ConfigError("config key '" + key + "' has the wrong type");
        }
    }

    json doc_;
};

json resolved_problem(const ProblemConfig& c)
{
    return {{"s", c.s}, {"alpha", c.alpha}, {"modes", c.modes}, {"grid", c.grid}};
}

json resolved_solver(const SolverOptions& o)
{
    return {{"max_iters", o.max_iters},
            {"tol_grad", o.tol_grad},
            {"tol_quotient", o.tol_quotient},
            {"initial_step", o.initial_step},
            {"backtrack", o.backtrack},
            {"armijo", o.armijo},
            {"memory", o.memory},
            {"init_center", o.init_center},
            {"init_width", o.init_width},
            {"positivity", o.positivity == PositivityMode::abs_project ? "abs_project" : "none"},
            {"allow_critical", o.allow_critical}};
}

int env_threads()
{
    const char* v = std::getenv("HENON_THREADS");
    if (v == nullptr || *v == '\0') {
        return 0;
    }
    int n = 0;
    const auto [ptr, ec] = std::from_chars(v, v + std::strlen(v), n);
    if (ec != std::errc() || *ptr != '\0' || n < 1) {
        throw ConfigError("HENON_THREADS must be a positive integer");
    }
    return n;
}

// ---------------------------------------------------------------- run context

struct Run {
    fs::path out;
    std::string command;
    json resolved = json::object();
    std::string started = utc_now();
    std::vector<fs::path> outputs;
    int warnings = 0;

    void emit(const std::string& name, const std::string& body)
    {
        const fs::path path = out / name;
        write_atomic(path, body);
        outputs.push_back(path);
    }

    void manifest(bool complete, int exit_status) const
    {
        json files = json::array();
        for (const auto& p : outputs) {
            files.push_back({{"path", p.filename().string()}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
        }
        json m = {{"tool", "henon_cli"},
                  {"version", HENON_VERSION},
                  {"command", command},
                  {"config", resolved},
                  {"started", started},
                  {"finished", complete ? json(utc_now()) : json(nullptr)},
                  {"complete", complete},
                  {"exit_status", complete ? json(exit_status) : json(nullptr)},
                  {"warnings", warnings},
                  {"outputs", files}};
        write_atomic(out / "manifest.json", m.dump(2) + "\n");
    }
};

std::string record_row(const SweepRecord& r)
{
    std::string row;
    for (const std::string& cell :
         {fmt(r.p_eps), fmt(r.q), fmt(r.quotient), fmt(r.multiplier), fmt(r.M1), fmt(r.M2), fmt(r.ratio),
          fmt(r.x_max), fmt(r.d_eps), fmt(r.lambda_eps), fmt(r.d_over_lambda), fmt(r.h_eps), fmt(r.remainder_rel),
          fmt(r.amp_ratio_fit), fmt(r.iterations), fmt(r.converged)}) {
        if (!row.empty()) {
            row += ',';
        }
        row += cell;
    }
    return row + "\n";
}

constexpr const char* csv_header =
    "p_eps,q,quotient,multiplier,M1,M2,ratio,x_max,d_eps,lambda_eps,d_over_lambda,h_eps,remainder_rel,"
    "amp_ratio_fit,iterations,converged\n";

json record_json(const SweepRecord& r)
{
    return {{"p_eps", r.p_eps},
            {"q", r.q},
            {"quotient", r.quotient},
            {"multiplier", r.multiplier},
            {"M1", r.M1},
            {"M2", r.M2},
            {"ratio", r.ratio},
            {"x_max", r.x_max},
            {"x_max_v", r.x_max_v},
            {"d_eps", r.d_eps},
            {"lambda_eps", r.lambda_eps},
            {"d_over_lambda", r.d_over_lambda},
            {"h_eps", r.h_eps},
            {"remainder_rel", num(r.remainder_rel)},
            {"remainder_radius", r.remainder_radius},
            {"remainder_radius_shrunk", r.remainder_radius_shrunk},
            {"amp_ratio_fit", num(r.amp_ratio_fit)},
            {"fit_residual", num(r.fit_residual)},
            {"symmetry_defect", num(r.symmetry_defect)},
            {"mass_fraction", num(r.mass_fraction)},
            {"residual_norm", r.residual_norm},
            {"min_trace", r.min_trace},
            {"extension_ratio", r.extension_ratio},
            {"iterations", r.iterations},
            {"converged", r.converged}};
}

json check(const std::string& name, bool pass, double measured, double tolerance, bool mandatory = true)
{
    return {{"name", name}, {"pass", pass}, {"measured", num(measured)}, {"tolerance", tolerance},
            {"mandatory", mandatory}};
}

int verdict(const json& checks)
{
    for (const auto& c : checks) {
        if (c.at("mandatory").get<bool>() && !c.at("pass").get<bool>()) {
            return not_converged;
        }
    }
    return ok;
}

// ---------------------------------------------------------------- commands

int cmd_solve(const Config& cfg, Run& run)
{
    const ProblemConfig pc = cfg.problem();
    const SolverOptions opts = cfg.solver();
    const ExponentConfig exp{cfg.need<double>("p"), cfg.get<double>("q", 2.0)};
    exp.validate();
    run.resolved = resolved_problem(pc);
    run.resolved["p"] = exp.p;
    run.resolved["q"] = exp.q;
    run.resolved["solver"] = resolved_solver(opts);
    run.manifest(false, 0);

    const BasisSpec basis = make_basis(pc);
    GroundState raw;
    try {
        raw = minimize_system(basis, exp, pc.alpha, opts);
    }
    catch (const NotConverged& e) {
        raw = e.state();
        ++run.warnings;
    }
    const GroundState st = lagrange_rescale(raw, basis);
    const ExtensionProfile profile(pc.s);
    const SweepRecord rec = diagnostics(st, basis, &profile);

    std::string csv = "k,lambda_k,u,v\n";
    for (Eigen::Index k = 0; k < st.u.coeffs().size(); ++k) {
        csv += fmt(static_cast<int>(k + 1)) + ',' + fmt(basis.eigenvalues()[k]) + ',' + fmt(st.u.coeffs()[k])
               + ',' + fmt(st.v.coeffs()[k]) + '\n';
    }
    run.emit("solution.csv", csv);

    json report = {{"quotient", raw.quotient},
                   {"constraint", raw.constraint},
                   {"beta", st.beta},
                   {"grad_norm", raw.grad_norm},
                   {"tail_fraction", tail_energy_fraction(st.u)},
                   {"record", record_json(rec)}};
    run.emit("solve.json", report.dump(2) + "\n");
    return raw.converged ? ok : not_converged;
}

int cmd_sweep(const Config& cfg, Run& run)
{
    SweepPlan plan;
    plan.config = cfg.problem();
    plan.q = cfg.get<double>("q", 2.0);
    plan.p_values = cfg.need<std::vector<double>>("p_values");
    plan.options = cfg.solver();
    plan.warm_start = cfg.get<bool>("warm_start", true);
    plan.threads = cfg.get<int>("threads", 1);
    if (const int cap = env_threads(); cap > 0) {
        plan.threads = cfg.raw().contains("threads") ? std::min(plan.threads, cap) : cap;
    }
    plan.validate();
    const auto sb = cfg.sobolev();

    run.resolved = resolved_problem(plan.config);
    run.resolved["q"] = plan.q;
    run.resolved["p_values"] = plan.p_values;
    run.resolved["warm_start"] = plan.warm_start;
    run.resolved["threads"] = cfg.get<int>("threads", 1);
    run.resolved["solver"] = resolved_solver(plan.options);
    run.resolved["sobolev"] = {{"eps0", sb.eps0}, {"count", sb.count}, {"terms", sb.terms}};
    run.manifest(false, 0);

    const BasisSpec basis = make_basis(plan.config);
    const SweepResult res = run_sweep(plan, basis);
    run.warnings += res.warnings;

    std::string csv = csv_header;
    for (const auto& r : res.records) {
        csv += record_row(r);
    }
    run.emit("sweep.csv", csv);

    json report = {{"records", json::array()}};
    for (const auto& r : res.records) {
        report["records"].push_back(record_json(r));
    }
    try {
        const SobolevEstimate est = sobolev_constant_estimate(basis, sb.eps0, sb.count, sb.terms);
        const CriticalityReport crit = criticality_limit_check(res.records, est.value);
        report["s_hat"] = est.value;
        report["s_hat_quotients"] = est.quotients;
        report["criticality"] = {{"gaps", crit.gaps},
                                 {"rel_gaps", crit.rel_gaps},
                                 {"final_rel_gap", crit.final_rel_gap},
                                 {"shrinking", crit.shrinking}};
    }
    catch (const ExtrapolationUnstable& e) {
        // the sweep itself is still valid; the critical target is not
        report["s_hat"] = nullptr;
        report["s_hat_error"] = e.what();
        ++run.warnings;
    }
    report["warnings"] = run.warnings;
    run.emit("sweep_report.json", report.dump(2) + "\n");
    return ok;
}

int cmd_identity(const Config& cfg, Run& run)
{
    const ProblemConfig pc = cfg.problem();
    const SolverOptions opts = cfg.solver();
    const auto pairs = cfg.get<std::vector<std::vector<double>>>("pairs", {{2.0, 2.0}, {2.5, 1.5}, {3.0, 1.5}});
    const auto alphas = cfg.get<std::vector<double>>("alphas", {0.0, 1.0});
    for (const auto& pq : pairs) {
        if (pq.size() != 2) {
            throw ConfigError("each entry of 'pairs' must be [p, q]");
        }
    }
    run.resolved = resolved_problem(pc);
    run.resolved["pairs"] = pairs;
    run.resolved["alphas"] = alphas;
    run.resolved["solver"] = resolved_solver(opts);
    run.manifest(false, 0);

    const BasisSpec basis = make_basis(pc);
    json cases = json::array();
    json checks = json::array();
    for (double alpha : alphas) {
        for (const auto& pq : pairs) {
            const IdentityReport r = identity_check(basis, pq[0], pq[1], alpha, opts);
            const std::string tag = "p=" + fmt(pq[0]) + ",q=" + fmt(pq[1]) + ",alpha=" + fmt(alpha);
            cases.push_back({{"p", r.p},
                             {"q", r.q},
                             {"alpha", r.alpha},
                             {"s_sys", r.s_sys},
                             {"s_scal", r.s_scal},
                             {"c_pq", r.c_pq},
                             {"ratio", r.s_sys / r.s_scal},
                             {"rel_dev", r.rel_dev},
                             {"ratio_dev", r.ratio_dev},
                             {"iterations_sys", r.iterations_sys},
                             {"iterations_scal", r.iterations_scal}});
            checks.push_back(check("identity " + tag, r.rel_dev <= 1e-3, r.rel_dev, 1e-3));
            checks.push_back(check("amplitude ratio " + tag, r.ratio_dev < 1e-2, r.ratio_dev, 1e-2));
        }
    }
    run.emit("identity.json", json{{"cases", cases}, {"checks", checks}}.dump(2) + "\n");
    return verdict(checks);
}

int cmd_bubble(const Config& cfg, Run& run)
{
    const ProblemConfig pc = cfg.problem();
    const auto eps = cfg.get<std::vector<double>>("eps", {2e-3, 1e-3, 5e-4, 2.5e-4});
    const bool estimate = cfg.get<bool>("estimate", false);
    const auto sb = cfg.sobolev();
    run.resolved = resolved_problem(pc);
    run.resolved["eps"] = eps;
    run.resolved["estimate"] = estimate;
    run.resolved["sobolev"] = {{"eps0", sb.eps0}, {"count", sb.count}, {"terms", sb.terms}};
    run.manifest(false, 0);

    const BasisSpec basis = make_basis(pc);
    json family = json::array();
    json checks = json::array();
    std::vector<double> qs;
    double worst_tail = 0.0;
    for (double e : eps) {
        const BubbleSpec spec = BubbleSpec::near_boundary(e, pc.s, pc.dim);
        const TruncatedBubble tb = truncated_bubble(spec, basis);
        const double q = quotient_scalar(tb.field, basis, pc.crit_exp(), 0.0, pc.s);
        qs.push_back(q);
        worst_tail = std::max(worst_tail, tb.tail_fraction);
        family.push_back({{"eps", e},
                          {"center", spec.center},
                          {"radius", spec.radius},
                          {"quotient", q},
                          {"tail_fraction", tb.tail_fraction},
                          {"outside_max", tb.outside_max}});
    }
    bool monotone = true;
    double worst_step = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < qs.size(); ++i) {
        monotone = monotone && qs[i] < qs[i - 1];
        worst_step = std::max(worst_step, qs[i] - qs[i - 1]);
    }
    checks.push_back(check("quotient decreasing in eps", monotone, worst_step, 0.0));
    checks.push_back(check("projection tail below 1%", worst_tail < 1e-2, worst_tail, 1e-2));

    // Kelvin algebra on 100 random points
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> ux(-4.0, 4.0);
    const std::function<double(double)> u = [&](double x) { return bubble_U(x, pc.dim, pc.s); };
    const std::function<double(double)> g = [](double x) { return std::exp(-x * x) + 0.25 * x; };
    const auto ku = kelvin(u, 0.0, pc.dim, pc.s);
    const auto kk = kelvin(kelvin(g, 0.0, pc.dim, pc.s), 0.0, pc.dim, pc.s);
    double fixed = 0.0;
    double invol = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double x = ux(rng);
        fixed = std::max(fixed, std::abs(ku(x) - u(x)));
        invol = std::max(invol, std::abs(kk(x) - g(x)) / std::max(1.0, std::abs(g(x))));
    }
    checks.push_back(check("kelvin fixed point", fixed < 1e-12, fixed, 1e-12));
    checks.push_back(check("kelvin involution", invol < 1e-12, invol, 1e-12));

    json report = {{"family", family}};
    if (estimate) {
        const SobolevEstimate est = sobolev_constant_estimate(basis, sb.eps0, sb.count, sb.terms);
        report["s_hat"] = {{"value", est.value},
                           {"eps", est.eps},
                           {"quotients", est.quotients},
                           {"fit_residual", est.fit_residual},
                           {"max_tail_fraction", est.max_tail_fraction}};
        checks.push_back(check("s_hat positive", est.value > 0.0, est.value, 0.0));
    }
    report["checks"] = checks;
    run.emit("bubble.json", report.dump(2) + "\n");
    return verdict(checks);
}

int cmd_extension(const Config& cfg, Run& run)
{
    const double s = cfg.need<double>("s");
    if (!(s > 0.0 && s < 1.0)) {
        throw ConfigError("s must lie in (0,1)");
    }
    const auto modes = cfg.get<std::size_t>("modes", 32);
    const int fields = cfg.get<int>("fields", 20);
    const auto seed = cfg.get<unsigned>("seed", 1);
    run.resolved = {{"s", s}, {"modes", modes}, {"fields", fields}, {"seed", seed}};
    run.manifest(false, 0);

    // the eigenbasis is independent of s; any admissible order builds it
    const BasisSpec basis = make_basis(ProblemConfig::make(0.25, 0.0, modes));
    const ExtensionProfile profile(s);
    json checks = json::array();

    const double norm = dtn_constant(s) * profile_energy_integral(s);
    checks.push_back(check("normalization identity", std::abs(norm - 1.0) < 1e-6, std::abs(norm - 1.0), 1e-6));

    double ode = 0.0;
    for (double z = 1e-2; z <= 35.0; z *= 1.3) {
        ode = std::max(ode, profile_ode_residual(s, z));
    }
    checks.push_back(check("profile ODE residual on [1e-2, 35]", ode < 1e-8, ode, 1e-8));

    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    auto random_field = [&] {
        Vector c(static_cast<Eigen::Index>(modes));
        for (Eigen::Index k = 0; k < c.size(); ++k) {
            c[k] = nd(rng) / ((1.0 + k) * (1.0 + k));
        }
        return SpectralField(c);
    };
    double iso = 0.0;
    double dtn = 0.0;
    double trace = 0.0;
    double lateral = 0.0;
    for (int i = 0; i < fields; ++i) {
        const SpectralField u = random_field();
        const double hs = hs_norm_squared(u, basis, s);
        iso = std::max(iso, std::abs(cylinder_energy(u, basis, profile) - hs) / hs);
        const SpectralField nl = neumann_limit(u, basis, profile);
        const SpectralField fl = frac_laplacian(u, basis, s);
        for (Eigen::Index k = 0; k < nl.coeffs().size(); ++k) {
            if (fl.coeffs()[k] != 0.0) {
                dtn = std::max(dtn, std::abs(nl.coeffs()[k] / fl.coeffs()[k] - 1.0));
            }
        }
        const Extension w = extend(u, basis, profile);
        const Vector samples = to_physical(u, basis);
        for (Eigen::Index j = 0; j < samples.size(); j += 17) {
            trace = std::max(trace, std::abs(w(basis.nodes()[j], 0.0) - samples[j]));
        }
        for (double y : {0.01, 0.3, 2.0}) {
            lateral = std::max({lateral, std::abs(w(1.0, y)), std::abs(w(-1.0, y))});
        }
    }
    checks.push_back(check("isometry", iso < 1e-6, iso, 1e-6));
    const bool half = std::abs(s - 0.5) < 1e-15;
    const double dtn_tol = half ? 1e-8 : 1e-2;
    checks.push_back(check("Dirichlet-to-Neumann per mode", dtn < dtn_tol, dtn, dtn_tol));
    checks.push_back(check("trace equals samples", trace < 1e-8, trace, 1e-8));
    checks.push_back(check("lateral Dirichlet", lateral < 1e-12, lateral, 1e-12));

    if (half) {
        double table = 0.0;
        for (double z = 1e-5; z < 45.0; z *= 1.07) {
            table = std::max({table, std::abs(profile(z) - std::exp(-z)), std::abs(profile.derivative(z) + std::exp(-z))});
        }
        checks.push_back(check("theta = exp(-z)", table < 1e-8, table, 1e-8));
        checks.push_back(check("k_s = 1", std::abs(ks_constant(s) - 1.0) < 1e-8, std::abs(ks_constant(s) - 1.0), 1e-8));
    }
    // boundary limit of the Poisson extension: O(y^{2s}), so informational below s = 1/2
    const double w0 = poisson_extension_W(0.0, 1e-4, 1, s);
    checks.push_back(check("W(0, 1e-4) = U(0)", std::abs(w0 - 1.0) < 1e-3, std::abs(w0 - 1.0), 1e-3, half));

    run.emit("extension.json", json{{"s", s}, {"k_s", ks_constant(s)}, {"checks", checks}}.dump(2) + "\n");
    return verdict(checks);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fractional Henon system: ground states, sweeps and checks"};
    app.set_version_flag("--version", HENON_VERSION);
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"solve", "constrained minimizer of one system"},
        {"sweep", "exponent sweep toward the critical line"},
        {"identity", "scalar/system coupling identity"},
        {"bubble", "truncated bubble family and Kelvin algebra"},
        {"extension-check", "extension invariants"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory");
    }
    CLI11_PARSE(app, argc, argv);

    Run run;
    run.command = app.get_subcommands().front()->get_name();
    int status = ok;
    try {
        json doc;
        {
            std::ifstream in(config_path);
            if (!in) {
                throw ConfigError("cannot read config " + config_path);
            }
            try {
                doc = json::parse(in);
            }
            catch (const json::parse_error& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
        }
        const Config cfg(std::move(doc));
        run.out = out_dir;
        fs::create_directories(run.out);
        if (run.command == "solve") {
            status = cmd_solve(cfg, run);
        }
        else if (run.command == "sweep") {
            status = cmd_sweep(cfg, run);
        }
        else if (run.command == "identity") {
            status = cmd_identity(cfg, run);
        }
        else if (run.command == "bubble") {
            status = cmd_bubble(cfg, run);
        }
        else {
            status = cmd_extension(cfg, run);
        }
    }
    catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        status = bad_config;
    }
    catch (const CriticalExponent& e) {
        std::cerr << "config error: " << e.what() << "\n";
        status = bad_config;
    }
    catch (const NotConverged& e) {
        std::cerr << "not converged: " << e.what() << "\n";
        status = not_converged;
    }
    catch (const henon::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        status = numerical;
    }
    catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        status = numerical;
    }
    if (!run.out.empty()) {
        try {
            run.manifest(true, status);
        }
        catch (const std::exception& e) {
            std::cerr << "cannot write manifest: " << e.what() << "\n";
            status = status == ok ? numerical : status;
        }
    }
    if (run.warnings > 0) {
        std::cerr << run.warnings << " warning(s), see manifest\n";
    }
    return status;
}
