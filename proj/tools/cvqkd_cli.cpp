// Command-line front end: single-point key rates, rate-vs-loss sweeps, g_max
// curves, noise frontiers, and the truncated-Fock oracle checks, all emitted as
// CSV. Exit codes: 0 success, 1 verification/runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cvqkd/cvqkd.hpp"

namespace {

using namespace cvqkd;

// 9 significant digits; %g switches to scientific exactly at |x| < 1e-4.
// Undefined values print as empty cells, NaN spelling varies across consumers.
std::string fmt(double x) {
    if (std::isnan(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

std::vector<double> parse_grid(const std::string& spec) {
    double start = 0.0, stop = 0.0, step = 0.0;
    char tail = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &start, &stop, &step, &tail) != 3 ||
        step <= 0.0 || stop < start)
        throw CLI::ValidationError("--grid",
                                   "expected start:stop:step with step > 0 and stop >= start");
    std::vector<double> xs;
    const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
    xs.reserve(static_cast<size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) xs.push_back(start + step * i);
    return xs;
}

// Flags shared by the physics subcommands. --va and --alpha2 address the same
// quantity (V_A = 2 alpha^2) and exclude each other.
struct PhysicsOpts {
    double va = 0.25;
    double alpha2 = 0.125;
    double beta = 0.8;
    double eps = 0.002;
    double gain = 4.0;
    std::string psuccess = "inverse-g2";
    CLI::Option* va_opt = nullptr;
    CLI::Option* alpha2_opt = nullptr;
    CLI::Option* gain_opt = nullptr;

    double alpha() const {
        return alpha2_opt->count() ? std::sqrt(alpha2) : std::sqrt(0.5 * va);
    }
    ProtocolParams protocol() const { return {alpha(), beta}; }
    NlaParams nla() const {
        NlaParams n{gain};
        if (psuccess != "inverse-g2") {
            const double p = std::stod(psuccess);
            if (!(p > 0.0 && p <= 1.0))
                throw CLI::ValidationError("--psuccess", "fixed probability must be in (0, 1]");
            n.fixed_success = p;
        }
        return n;
    }
};

void add_modulation_flags(CLI::App* cmd, PhysicsOpts& o) {
    o.va_opt = cmd->add_option("--va", o.va, "Modulation variance V_A = 2 alpha^2")
                   ->capture_default_str();
    o.alpha2_opt = cmd->add_option("--alpha2", o.alpha2, "alpha^2 (alternative to --va)");
    o.va_opt->excludes(o.alpha2_opt);
    o.alpha2_opt->excludes(o.va_opt);
}

void add_nla_flags(CLI::App* cmd, PhysicsOpts& o, bool default_gain) {
    o.gain_opt = cmd->add_option("--gain", o.gain, default_gain
                                                       ? "NLA amplitude gain g"
                                                       : "NLA amplitude gain g (omit for the "
                                                         "original protocol)");
    if (default_gain) o.gain_opt->capture_default_str();
    o.gain_opt->check(CLI::Range(1.0, 1e6));
    cmd->add_option("--psuccess", o.psuccess,
                    "Success probability: inverse-g2 or a fixed value in (0,1]")
        ->capture_default_str();
}

void write_output(const std::string& csv, const std::string& path) {
    if (path.empty()) {
        std::cout << csv;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file " + path);
    f << csv;
}

// CLI11 applies --config files only for options owned by the root app; ours
// sit on the subcommands, so the file is expanded into ordinary --key=value
// tokens before the parse. A key is dropped when its flag, or a flag it
// excludes, was given explicitly: the command line always wins. Keys inside a
// [section] apply only when the section names the active subcommand.
std::vector<std::string> expand_config_args(std::vector<std::string> args) {
    if (args.empty() || args.front().empty() || args.front()[0] == '-') return args;
    const std::string sub = args.front();
    std::vector<std::string> given;
    std::string path;
    for (size_t i = 1; i < args.size(); ++i) {
        if (args[i].rfind("--", 0) != 0) continue;
        const auto eq = args[i].find('=');
        const std::string name = args[i].substr(0, eq);
        given.push_back(name);
        if (name == "--config")
            path = eq != std::string::npos ? args[i].substr(eq + 1)
                   : i + 1 < args.size()   ? args[i + 1]
                                           : "";
    }
    if (path.empty()) return args;
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("--config: cannot open '" + path + "'");
    const auto trim = [](const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const auto explicit_flag = [&](const std::string& name) {
        return std::find(given.begin(), given.end(), name) != given.end();
    };
    static const std::pair<const char*, const char*> exclusive[] = {
        {"va", "alpha2"},
        {"alpha2", "va"},
        {"loss-db", "distance-km"},
        {"distance-km", "loss-db"}};
    std::string line, section;
    while (std::getline(f, line)) {
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s[0] == '[') {
            const auto close = s.find(']');
            if (close == std::string::npos)
                throw std::invalid_argument("--config: unterminated section '" + s + "'");
            section = trim(s.substr(1, close - 1));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--config: expected key = value, got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (!value.empty() && value.front() == '"') {
            const auto close = value.find('"', 1);
            if (close == std::string::npos)
                throw std::invalid_argument("--config: unterminated string for '" + key + "'");
            value = value.substr(1, close - 1);
        } else {
            value = trim(value.substr(0, value.find('#')));  // inline comment
        }
        if (key.empty() || value.empty())
            throw std::invalid_argument("--config: expected key = value, got '" + s + "'");
        if (key == "config")
            throw std::invalid_argument("--config: a config file cannot name another one");
        if (!section.empty() && section != sub) continue;
        if (explicit_flag("--" + key)) continue;
        bool partner_given = false;
        for (const auto& [a, b] : exclusive)
            if (key == a && explicit_flag(std::string("--") + b)) partner_given = true;
        if (partner_given) continue;
        args.push_back("--" + key + '=' + value);
    }
    return args;
}

// ---- keyrate -------------------------------------------------------------

struct KeyrateOpts {
    PhysicsOpts phys;
    double loss_db = 0.0;
    double distance_km = 0.0;
    double atten = 0.2;
    std::string output;
    CLI::Option* dist_opt = nullptr;
};

int run_keyrate(const KeyrateOpts& o) {
    const double loss =
        o.dist_opt->count() ? distance_to_loss(o.distance_km, {o.atten}) : o.loss_db;
    const ChannelParams ch{loss_to_transmittance(loss), o.phys.eps};
    const ProtocolParams p = o.phys.protocol();
    std::ostringstream csv;
    if (o.phys.gain_opt->count()) {
        const NlaParams nla = o.phys.nla();
        const KeyRateBreakdown kr = nla_key_rate(p, ch, nla);
        const EquivalentChannel eq = equivalent_channel(ch, nla.gain);
        csv << "i_ab,s_be,nu1,nu2,nu3,rate,status,eta,eps_g,g_max\n"
            << fmt(kr.mutual_information) << ',' << fmt(kr.holevo_bound) << ',' << fmt(kr.nu1)
            << ',' << fmt(kr.nu2) << ',' << fmt(kr.nu3) << ',' << fmt(kr.rate) << ','
            << to_string(kr.status) << ',' << fmt(eq.eta) << ',' << fmt(eq.eps_g) << ','
            << fmt(g_max(ch)) << '\n';
    } else {
        const KeyRateBreakdown kr = key_rate(p, ch);
        csv << "i_ab,s_be,nu1,nu2,nu3,rate,status\n"
            << fmt(kr.mutual_information) << ',' << fmt(kr.holevo_bound) << ',' << fmt(kr.nu1)
            << ',' << fmt(kr.nu2) << ',' << fmt(kr.nu3) << ',' << fmt(kr.rate) << ','
            << to_string(kr.status) << '\n';
    }
    write_output(csv.str(), o.output);
    return 0;
}

// ---- sweep ---------------------------------------------------------------

struct SweepOpts {
    PhysicsOpts phys;
    std::string grid = "0:40:0.5";
    std::string axis = "loss";
    double atten = 0.2;
    std::string output;
};

int run_sweep(const SweepOpts& o) {
    const std::vector<double> xs = parse_grid(o.grid);
    const ProtocolParams p = o.phys.protocol();
    const NlaParams nla = o.phys.nla();
    const bool by_distance = o.axis == "distance";
    std::ostringstream csv;
    csv << (by_distance ? "distance_km" : "loss_db") << ",rate_original,rate_nla,eta,eps_g\n";
    for (const double x : xs) {
        const double loss = by_distance ? distance_to_loss(x, {o.atten}) : x;
        const ChannelParams ch{loss_to_transmittance(loss), o.phys.eps};
        const KeyRateBreakdown orig = key_rate(p, ch);
        const KeyRateBreakdown mod = nla_key_rate(p, ch, nla);
        const EquivalentChannel eq = equivalent_channel(ch, nla.gain);
        csv << fmt(x) << ',' << fmt(orig.rate) << ',' << fmt(mod.rate) << ',' << fmt(eq.eta)
            << ',' << fmt(eq.eps_g) << '\n';
    }
    write_output(csv.str(), o.output);
    return 0;
}

// ---- gmax ----------------------------------------------------------------

struct GmaxOpts {
    double eps = 0.002;
    std::string grid = "0:30:0.5";
    std::string output;
};

int run_gmax(const GmaxOpts& o) {
    std::ostringstream csv;
    csv << "loss_db,g_max\n";
    for (const double loss : parse_grid(o.grid))
        csv << fmt(loss) << ',' << fmt(g_max({loss_to_transmittance(loss), o.eps})) << '\n';
    write_output(csv.str(), o.output);
    return 0;
}

// ---- frontier ------------------------------------------------------------

struct FrontierOpts {
    PhysicsOpts phys;
    std::string grid = "0:40:2";
    double tol = 1e-6;
    std::string output;
};

int run_frontier(const FrontierOpts& o) {
    const ProtocolParams p = o.phys.protocol();
    const NlaParams nla = o.phys.nla();
    std::ostringstream csv;
    csv << "loss_db,eps_max_original,eps_max_nla\n";
    for (const double loss : parse_grid(o.grid)) {
        const FrontierResult orig = max_excess_noise(p, loss, std::nullopt, o.tol);
        const FrontierResult mod = max_excess_noise(p, loss, nla, o.tol);
        csv << fmt(loss) << ',' << fmt(orig.value) << ',' << fmt(mod.value) << '\n';
    }
    write_output(csv.str(), o.output);
    return 0;
}

// ---- verify --------------------------------------------------------------

struct VerifyOpts {
    PhysicsOpts phys;
    double loss_db = 3.0103;  // T ~ 0.5 for the mixture checks
    double lambda2 = 0.01;
    int cutoff = 40;
    std::string output;
};

int run_verify(VerifyOpts& o) {
    std::ostringstream csv;
    csv << "check,deviation,tolerance,result\n";
    bool all_pass = true;
    const auto emit = [&](const char* name, double dev, double tol) {
        const bool ok = dev <= tol;
        all_pass = all_pass && ok;
        char dv[32], tl[32];
        std::snprintf(dv, sizeof dv, "%.3e", dev);
        std::snprintf(tl, sizeof tl, "%.0e", tol);
        csv << name << ',' << dv << ',' << tl << ',' << (ok ? "pass" : "fail") << '\n';
    };

    const double alpha = o.phys.alpha();
    const int N = o.cutoff;
    double worst_eig = 0.0;  // most negative eigenvalue seen, as a positive defect

    // orthonormality of the modulation eigenbasis
    const auto phi = fock::build_phi_states(alpha, N);
    double gram_dev = 0.0;
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) {
            const std::complex<double> g =
                phi[static_cast<size_t>(j)].amplitudes.dot(phi[static_cast<size_t>(k)].amplitudes);
            gram_dev = std::max(gram_dev, std::abs(g - (j == k ? 1.0 : 0.0)));
        }
    emit("phi_orthonormality", gram_dev, 1e-10);

    // two-mode source state moments against the analytic forms
    const fock::Matrix M = fock::source_state(alpha, N);
    emit("source_mean_photons", std::abs(fock::source_mean_photons_B(M) - alpha * alpha), 1e-8);
    emit("correlation_oracle", std::abs(fock::oracle_Z(alpha, N) - correlation_Z(alpha)), 1e-8);

    // displaced thermal state and the g^n transformation law
    const double l2 = o.lambda2;
    const double g = o.phys.gain;
    const fock::FockDensityMatrix rho = fock::displaced_thermal(0.3, std::sqrt(l2), N);
    worst_eig = std::max(worst_eig, -rho.min_eigenvalue());
    emit("thermal_variance", std::abs(fock::quadrature_variance(rho) - (1 + l2) / (1 - l2)),
         1e-6);
    const fock::FockDensityMatrix amp = fock::apply_nla(rho, g);
    worst_eig = std::max(worst_eig, -amp.min_eigenvalue());
    const double g2l2 = g * g * l2;
    emit("nla_mean",
         std::abs(fock::mean_amplitude(amp) - std::complex<double>(g * (1 - l2) / (1 - g2l2) * 0.3)),
         1e-5);
    emit("nla_thermal_parameter", std::abs(fock::thermal_parameter_sq(amp) - g2l2), 1e-5);
    emit("nla_variance",
         std::abs(fock::quadrature_variance(amp) - (1 + g2l2) / (1 - g2l2)), 1e-5);

    // NLA output variance on Bob's four-state mixture, against both closed forms
    const ProtocolParams p = o.phys.protocol();
    const ChannelParams ch{loss_to_transmittance(o.loss_db), o.phys.eps};
    const double mix_var = fock::oracle_output_variance(p, ch, g, N);
    const double lam = lambda_from_noise(ch);
    const double cl2 = lam * lam, cg2l2 = g * g * cl2;
    const double direct = (1 + cg2l2) / (1 - cg2l2) +
                          2 * g * g * std::pow((1 - cl2) / (1 - cg2l2), 2) *
                              ch.transmittance * alpha * alpha;
    emit("mixture_variance_closed_form", std::abs(mix_var - direct), 1e-5);
    const EquivalentChannel eq = equivalent_channel(ch, g);
    emit("mixture_variance_equivalent_channel",
         std::abs(mix_var - (1 + eq.eta * eq.eps_g + 2 * eq.eta * alpha * alpha)), 1e-5);

    emit("density_positivity", std::max(worst_eig, 0.0), 1e-10);

    write_output(csv.str(), o.output);
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Four-state CVQKD key-rate toolkit (lossy/noisy Gaussian channels, optional "
                 "noiseless linear amplification)"};
    app.require_subcommand(1);
    std::string config_path;

    KeyrateOpts ko;
    CLI::App* keyrate = app.add_subcommand("keyrate", "Key-rate breakdown at one channel point");
    add_modulation_flags(keyrate, ko.phys);
    keyrate->add_option("--beta", ko.phys.beta, "Reconciliation efficiency")
        ->capture_default_str();
    keyrate->add_option("--eps", ko.phys.eps, "Excess noise (shot-noise units, channel input)")
        ->capture_default_str();
    auto* ko_loss = keyrate->add_option("--loss-db", ko.loss_db, "Channel loss in dB")
                        ->capture_default_str();
    ko.dist_opt = keyrate->add_option("--distance-km", ko.distance_km, "Fiber length in km");
    ko_loss->excludes(ko.dist_opt);
    ko.dist_opt->excludes(ko_loss);
    keyrate->add_option("--atten", ko.atten, "Fiber attenuation in dB/km")->capture_default_str();
    add_nla_flags(keyrate, ko.phys, false);
    keyrate->add_option("--output", ko.output, "Write CSV to a file instead of stdout");
    keyrate->add_option("--config", config_path, "TOML config file; keys match the long flags");

    SweepOpts so;
    CLI::App* sweep = app.add_subcommand("sweep", "Rate-vs-loss (or distance) CSV table");
    add_modulation_flags(sweep, so.phys);
    sweep->add_option("--beta", so.phys.beta, "Reconciliation efficiency")->capture_default_str();
    sweep->add_option("--eps", so.phys.eps, "Excess noise")->capture_default_str();
    add_nla_flags(sweep, so.phys, true);
    sweep->add_option("--grid", so.grid, "Axis grid start:stop:step")->capture_default_str();
    sweep->add_option("--axis", so.axis, "Grid variable")
        ->check(CLI::IsMember({"loss", "distance"}))
        ->capture_default_str();
    sweep->add_option("--atten", so.atten, "Fiber attenuation in dB/km")->capture_default_str();
    sweep->add_option("--output", so.output, "Write CSV to a file instead of stdout");
    sweep->add_option("--config", config_path, "TOML config file; keys match the long flags");

    GmaxOpts go;
    CLI::App* gmax_cmd = app.add_subcommand("gmax", "Maximum physical NLA gain against loss");
    gmax_cmd->add_option("--eps", go.eps, "Excess noise")->capture_default_str();
    gmax_cmd->add_option("--grid", go.grid, "Loss grid start:stop:step (dB)")
        ->capture_default_str();
    gmax_cmd->add_option("--output", go.output, "Write CSV to a file instead of stdout");
    gmax_cmd->add_option("--config", config_path, "TOML config file; keys match the long flags");

    FrontierOpts fo;
    CLI::App* frontier =
        app.add_subcommand("frontier", "Maximum tolerable excess noise against loss");
    add_modulation_flags(frontier, fo.phys);
    frontier->add_option("--beta", fo.phys.beta, "Reconciliation efficiency")
        ->capture_default_str();
    add_nla_flags(frontier, fo.phys, true);
    frontier->add_option("--grid", fo.grid, "Loss grid start:stop:step (dB)")
        ->capture_default_str();
    frontier->add_option("--tol", fo.tol, "Bisection tolerance on eps")->capture_default_str();
    frontier->add_option("--output", fo.output, "Write CSV to a file instead of stdout");
    frontier->add_option("--config", config_path, "TOML config file; keys match the long flags");

    VerifyOpts vo;
    vo.phys.eps = 0.004;
    vo.phys.gain = 2.0;
    CLI::App* verify = app.add_subcommand("verify", "Truncated-Fock oracle checks");
    add_modulation_flags(verify, vo.phys);
    verify->add_option("--eps", vo.phys.eps, "Excess noise for the mixture checks")
        ->capture_default_str();
    verify->add_option("--loss-db", vo.loss_db, "Loss for the mixture checks")
        ->capture_default_str();
    add_nla_flags(verify, vo.phys, true);
    verify->add_option("--lambda2", vo.lambda2, "Thermal parameter squared of the test state")
        ->capture_default_str();
    verify->add_option("--cutoff", vo.cutoff, "Fock-space photon-number cutoff")
        ->capture_default_str()
        ->check(CLI::Range(2, 400));
    verify->add_option("--output", vo.output, "Write CSV to a file instead of stdout");
    verify->add_option("--config", config_path, "TOML config file; keys match the long flags");

    if (argc > 0) app.name(argv[0]);
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = expand_config_args(std::move(args));
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    std::reverse(args.begin(), args.end());  // the vector overload wants reversed args
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (keyrate->parsed()) return run_keyrate(ko);
        if (sweep->parsed()) return run_sweep(so);
        if (gmax_cmd->parsed()) return run_gmax(go);
        if (frontier->parsed()) return run_frontier(fo);
        if (verify->parsed()) return run_verify(vo);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
