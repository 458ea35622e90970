// experiments.hpp: Config resolution, validation and the experiment runner behind the CLI.
//
// Config is JSON. Resolution order: built-in defaults <- figure preset <- config file <- --set.
// Every experiment writes its data files plus manifest.json into the output directory. The
// manifest is written with status "incomplete" before any compute and rewritten at the end;
// wall-clock timestamps live only under manifest "run_info", so data files are byte-stable.

#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "nlwg/correlation.hpp"
#include "nlwg/dicke.hpp"
#include "nlwg/dynamics.hpp"
#include "nlwg/feasibility.hpp"
#include "nlwg/io.hpp"
#include "nlwg/lindblad.hpp"
#include "nlwg/two_phonon_ed.hpp"
#include "nlwg/waveguide.hpp"

namespace nlwg {

using json = nlohmann::json;

inline json default_config() {
    return json::parse(R"({
  "experiment": null,
  "output": "nlwg-out",
  "waveguide": {"n_sites": 60, "hopping": 1.0, "nonlinearity": 0.7, "phonon_loss": 0.2,
                "base_frequency": 0.0, "boundary": "periodic"},
  "spins": {"positions": [0, 0], "frequency": -2.03, "coupling": 0.1, "K0": null},
  "numerics": {"t_max": null, "t_points": 201, "tolerance": 1e-9, "k_grid": 401, "seed_free": true},
  "band": {"nonlinearities": [2.0, 4.0], "ed_sites": 41},
  "correlation": {"nonlinearities": null, "momenta": null, "resonant": true, "r_max": 10},
  "decay": {"separations": null, "single_spin": false, "reduced": true, "fit_window": null},
  "lindblad": {"separations": null, "n_spins": 4, "lifetimes": 10.0},
  "subradiance": {"plateau": true},
  "dicke": {"kind": "supercorrelated", "kinds": null, "n_spins": 100, "rate": 1.0, "t_points": 2001,
            "snapshot_levels": [0.999, 0.75, 0.5, 0.25], "mean_field": true},
  "grouped": {"nonlinearities": [4.0, 3.0], "K0": 1.5707963267948966, "t_points": 301, "lifetimes": 3.0},
  "feasibility": {"length": 8.5e-7, "width": 8e-8, "height": 8e-8, "youngs_modulus": 1.2e12,
                  "density": 3500.0, "quality_factor": 1e6, "temperature": 0.01, "J_over_2pi": 1e4,
                  "g_over_2pi": 1e3, "stated_evolution_time": 5e-4, "stated_evolution_time_in_J": 5.0,
                  "reference_omega_r_over_2pi": 2e9, "T1": 1.0, "T2": 1e-3}
})");
}

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"band", "correlation", "decay", "subradiance", "lindblad",
                                                "dicke", "grouped", "feasibility", "fig2", "fig3",
                                                "fig4", "fig5", "fig6", "fig7", "fig8"};
    return names;
}

// Figure presets, applied over the defaults.
inline json figure_preset(const std::string& fig) {
    if (fig == "fig2") return json::parse(R"({"band": {"nonlinearities": [1.0, 2.0, 4.0, 8.0], "ed_sites": 41}})");
    if (fig == "fig3")
        return json::parse(R"({"waveguide": {"nonlinearity": 4.0},
          "correlation": {"nonlinearities": [1.0, 2.0, 4.0, 8.0],
                          "momenta": [0.0, 0.7853981633974483, 1.4451326206513049, 2.356194490192345],
                          "resonant": true, "r_max": 10}})");
    if (fig == "fig4")
        return json::parse(R"({"waveguide": {"n_sites": 60, "nonlinearity": 0.7, "phonon_loss": 0.2},
          "spins": {"positions": [0, 0], "frequency": -2.03, "coupling": 0.1},
          "numerics": {"t_max": 5.0, "t_points": 201},
          "decay": {"separations": [0, 5, 10], "single_spin": true, "reduced": true}})");
    if (fig == "fig5")
        return json::parse(R"({"waveguide": {"n_sites": 41, "nonlinearity": 1.0, "phonon_loss": 0.0},
          "spins": {"frequency": -2.04, "coupling": 0.1},
          "lindblad": {"separations": [0, 1, 2, 3, 4], "n_spins": 4}})");
    if (fig == "fig6" || fig == "fig7")
        return json::parse(R"({"dicke": {"kinds": ["supercorrelated", "superradiance"], "n_spins": 100, "rate": 1.0}})");
    if (fig == "fig8") return json::parse(R"({"waveguide": {"n_sites": 41}, "grouped": {"nonlinearities": [4.0, 3.0]}})");
    throw Error("validation", "unknown figure '" + fig + "' (expected fig2..fig8)");
}

namespace detail {

// Recursive merge; objects merge key-wise, everything else replaces. Unknown keys are rejected
// against the defaults so that typos fail before compute.
inline void merge_into(json& dst, const json& src, const json& schema, const std::string& path) {
    require(src.is_object(), "config: '" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
    for (auto it = src.begin(); it != src.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        require(schema.contains(it.key()), "config: unknown key '" + key + "'");
        const json& sub = schema[it.key()];
        require(!sub.is_object() || it->is_object(), "config: '" + key + "' must be an object");
        if (sub.is_object()) merge_into(dst[it.key()], *it, sub, key);
        else dst[it.key()] = *it;
    }
}

} // namespace detail

inline void merge_config(json& cfg, const json& patch) { detail::merge_into(cfg, patch, default_config(), ""); }

// "a.b.c=value": value parsed as JSON when possible, else taken as a string.
inline void apply_override(json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos && eq > 0, "--set expects key=value (got '" + assignment + "')");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    json patch = value;
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    merge_config(cfg, patch);
}

inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("io", "cannot read config " + path.string());
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw Error("validation", "config " + path.string() + " is not valid JSON: " + e.what());
    }
}

inline json resolve_config(const std::string& experiment, const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides) {
    json cfg = default_config();
    if (experiment.rfind("fig", 0) == 0) merge_config(cfg, figure_preset(experiment));
    if (file) merge_config(cfg, load_json_file(*file));
    for (const auto& o : overrides) apply_override(cfg, o);
    cfg["experiment"] = experiment;
    return cfg;
}

// ---- typed views ---------------------------------------------------------------

namespace detail {

inline double num(const json& j, const std::string& name) {
    require(j.is_number(), "config: '" + name + "' must be a number");
    return j.get<double>();
}
inline int integer(const json& j, const std::string& name) {
    require(j.is_number_integer(), "config: '" + name + "' must be an integer");
    return j.get<int>();
}
inline std::vector<double> numbers(const json& j, const std::string& name) {
    require(j.is_array(), "config: '" + name + "' must be an array of numbers");
    std::vector<double> v;
    for (const auto& x : j) v.push_back(num(x, name));
    return v;
}
inline std::vector<int> integers(const json& j, const std::string& name) {
    require(j.is_array(), "config: '" + name + "' must be an array of integers");
    std::vector<int> v;
    for (const auto& x : j) v.push_back(integer(x, name));
    return v;
}

// Short label for file names: 4 -> "4", 0.7 -> "0.7".
inline std::string label(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

} // namespace detail

inline WaveguideParams waveguide_from(const json& cfg) {
    const json& w = cfg.at("waveguide");
    WaveguideParams p;
    p.n_sites = detail::integer(w.at("n_sites"), "waveguide.n_sites");
    p.hopping = detail::num(w.at("hopping"), "waveguide.hopping");
    p.nonlinearity = detail::num(w.at("nonlinearity"), "waveguide.nonlinearity");
    p.phonon_loss = detail::num(w.at("phonon_loss"), "waveguide.phonon_loss");
    p.base_frequency = detail::num(w.at("base_frequency"), "waveguide.base_frequency");
    require(w.at("boundary") == "periodic", "waveguide.boundary must be \"periodic\"");
    p.validate();
    return p;
}

// spins.K0, when set, overrides spins.frequency with the resonant value E_{K0}/2.
inline SpinEnsemble spins_from(const json& cfg, const WaveguideParams& p) {
    const json& s = cfg.at("spins");
    SpinEnsemble e;
    e.positions = detail::integers(s.at("positions"), "spins.positions");
    e.coupling = detail::num(s.at("coupling"), "spins.coupling");
    if (s.at("K0").is_null()) {
        e.frequency = detail::num(s.at("frequency"), "spins.frequency");
    } else {
        const double K0 = detail::num(s.at("K0"), "spins.K0");
        require(K0 > 0.0 && K0 < pi, "spins.K0 must lie in (0, pi)");
        e.frequency = resonant_spin_frequency(K0, p);
    }
    e.validate(p);
    return e;
}

inline CorrelationOptions correlation_options_from(const json& cfg) {
    CorrelationOptions o;
    o.k_points = detail::integer(cfg.at("numerics").at("k_grid"), "numerics.k_grid");
    require(o.k_points >= 3, "numerics.k_grid must be >= 3");
    return o;
}

inline PhysicalUnits physical_units_from(const json& cfg) {
    const json& f = cfg.at("feasibility");
    PhysicalUnits u;
    u.length = detail::num(f.at("length"), "feasibility.length");
    u.width = detail::num(f.at("width"), "feasibility.width");
    u.height = detail::num(f.at("height"), "feasibility.height");
    u.youngs_modulus = detail::num(f.at("youngs_modulus"), "feasibility.youngs_modulus");
    u.density = detail::num(f.at("density"), "feasibility.density");
    u.quality_factor = detail::num(f.at("quality_factor"), "feasibility.quality_factor");
    u.temperature = detail::num(f.at("temperature"), "feasibility.temperature");
    u.J_over_2pi = detail::num(f.at("J_over_2pi"), "feasibility.J_over_2pi");
    u.g_over_2pi = detail::num(f.at("g_over_2pi"), "feasibility.g_over_2pi");
    u.stated_evolution_time = detail::num(f.at("stated_evolution_time"), "feasibility.stated_evolution_time");
    u.stated_evolution_time_in_J =
        detail::num(f.at("stated_evolution_time_in_J"), "feasibility.stated_evolution_time_in_J");
    u.reference_omega_r_over_2pi =
        detail::num(f.at("reference_omega_r_over_2pi"), "feasibility.reference_omega_r_over_2pi");
    u.T1 = detail::num(f.at("T1"), "feasibility.T1");
    u.T2 = detail::num(f.at("T2"), "feasibility.T2");
    u.validate();
    return u;
}

inline int t_points_from(const json& cfg) {
    const int n = detail::integer(cfg.at("numerics").at("t_points"), "numerics.t_points");
    require(n >= 2, "numerics.t_points must be >= 2");
    return n;
}

inline std::optional<double> t_max_from(const json& cfg) {
    const json& t = cfg.at("numerics").at("t_max");
    if (t.is_null()) return std::nullopt;
    const double v = detail::num(t, "numerics.t_max");
    require(v > 0.0, "numerics.t_max must be > 0");
    return v;
}

inline std::vector<LadderKind> ladder_kinds_from(const json& cfg) {
    const json& d = cfg.at("dicke");
    std::vector<LadderKind> kinds;
    if (d.at("kinds").is_null()) {
        require(d.at("kind").is_string(), "dicke.kind must be a string");
        kinds.push_back(parse_ladder_kind(d.at("kind").get<std::string>()));
    } else {
        require(d.at("kinds").is_array(), "dicke.kinds must be an array");
        for (const auto& k : d.at("kinds")) {
            require(k.is_string(), "dicke.kinds entries must be strings");
            kinds.push_back(parse_ladder_kind(k.get<std::string>()));
        }
    }
    return kinds;
}

// Checks every sub-config the experiment touches; throws Error("validation", ...) on failure.
inline void validate_config(const std::string& experiment, const json& cfg) {
    require(std::find(experiment_names().begin(), experiment_names().end(), experiment) != experiment_names().end(),
            "unknown experiment '" + experiment + "'");
    require(cfg.at("output").is_string(), "output must be a directory path string");
    const double tol = detail::num(cfg.at("numerics").at("tolerance"), "numerics.tolerance");
    require(tol > 0.0 && tol < 1e-2, "numerics.tolerance must be in (0, 1e-2)");
    t_points_from(cfg);
    t_max_from(cfg);
    correlation_options_from(cfg);
    const std::string& e = experiment;
    if (e == "band" || e == "fig2") {
        for (double U : detail::numbers(cfg.at("band").at("nonlinearities"), "band.nonlinearities"))
            require(U > 0.0, "band.nonlinearities must be > 0");
        const int n = detail::integer(cfg.at("band").at("ed_sites"), "band.ed_sites");
        require(n >= 3 && n <= EdOptions{}.max_sites, "band.ed_sites must be in [3, 80]");
    }
    if (e == "correlation" || e == "fig3") {
        const auto p = waveguide_from(cfg);
        const json& c = cfg.at("correlation");
        if (!c.at("nonlinearities").is_null()) detail::numbers(c.at("nonlinearities"), "correlation.nonlinearities");
        if (!c.at("momenta").is_null()) detail::numbers(c.at("momenta"), "correlation.momenta");
        require(c.at("resonant").is_boolean(), "correlation.resonant must be a boolean");
        require(detail::integer(c.at("r_max"), "correlation.r_max") >= 0, "correlation.r_max must be >= 0");
        if (c.at("momenta").is_null() || !c.at("resonant").get<bool>()) spins_from(cfg, p);
    }
    if (e == "decay" || e == "fig4") {
        const auto p = waveguide_from(cfg);
        const auto s = spins_from(cfg, p);
        const json& d = cfg.at("decay");
        if (!d.at("separations").is_null())
            for (int r : detail::integers(d.at("separations"), "decay.separations"))
                require(r >= 0 && r < p.n_sites, "decay.separations must lie in [0, n_sites)");
        else
            require(s.size() <= 2, "decay: the full lattice model tracks at most 2 excitations (N <= 2 spins)");
        if (!d.at("fit_window").is_null()) {
            const auto w = detail::numbers(d.at("fit_window"), "decay.fit_window");
            require(w.size() == 2 && w[0] < w[1], "decay.fit_window must be [t_from, t_to] with t_from < t_to");
        }
    }
    if (e == "lindblad" || e == "subradiance" || e == "fig5") {
        const auto p = waveguide_from(cfg);
        const auto s = spins_from(cfg, p);
        const json& l = cfg.at("lindblad");
        const int n = detail::integer(l.at("n_spins"), "lindblad.n_spins");
        require(n >= 1 && n <= max_lindblad_spins, "lindblad.n_spins must be in [1, 8]", "dimension_cap");
        if (!l.at("separations").is_null())
            for (int r : detail::integers(l.at("separations"), "lindblad.separations"))
                require(r >= 0 && (n - 1) * r < p.n_sites, "lindblad.separations: equally spaced spins must fit the ring");
        else
            require(s.size() <= max_lindblad_spins, "lindblad: at most 8 spins", "dimension_cap");
        require(detail::num(l.at("lifetimes"), "lindblad.lifetimes") > 0.0, "lindblad.lifetimes must be > 0");
    }
    if (e == "dicke" || e == "fig6" || e == "fig7") {
        ladder_kinds_from(cfg);
        const json& d = cfg.at("dicke");
        const int n = detail::integer(d.at("n_spins"), "dicke.n_spins");
        ladder_rates(LadderKind::superradiance, n);
        require(detail::num(d.at("rate"), "dicke.rate") >= 0.0, "dicke.rate must be >= 0 (negative rate rejected)");
        require(detail::integer(d.at("t_points"), "dicke.t_points") >= 2, "dicke.t_points must be >= 2");
        for (double l : detail::numbers(d.at("snapshot_levels"), "dicke.snapshot_levels"))
            require(l > 0.0 && l <= 1.0, "dicke.snapshot_levels must lie in (0, 1]");
    }
    if (e == "grouped" || e == "fig8") {
        const auto p = waveguide_from(cfg);
        require(p.n_sites > 4, "grouped: waveguide.n_sites must exceed 4");
        const double K0 = detail::num(cfg.at("grouped").at("K0"), "grouped.K0");
        require(K0 > 0.0 && K0 < pi, "grouped.K0 must lie in (0, pi)");
        for (double U : detail::numbers(cfg.at("grouped").at("nonlinearities"), "grouped.nonlinearities")) {
            WaveguideParams q = p;
            q.nonlinearity = U;
            require(U > 0.0, "grouped.nonlinearities must be > 0");
            require(resonant_spin_frequency(K0, q) - q.base_frequency < -2.0 * q.hopping,
                    "grouped: resonant omega_e at U=" + detail::label(U) +
                        " violates invariant omega_e - omega_r < -2J");
        }
    }
    if (e == "feasibility") {
        physical_units_from(cfg);
        waveguide_from(cfg);
    }
}

// ---- artifacts -----------------------------------------------------------------

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

    void csv(const std::string& name, const CsvTable& t) { text(name, t.str()); }
    void csv(const std::string& name, const TimeSeries& ts) { csv(name, ts.to_csv()); }
    void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
    void text(const std::string& name, const std::string& content) {
        write_text_file(dir_ / name, content);
        files_.push_back(name);
    }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

inline json warnings_json(const std::vector<std::string>& w) { return json(w); }

// ---- experiments -----------------------------------------------------------------

namespace detail {

inline json band_experiment(const json& cfg, ArtifactWriter& out) {
    const WaveguideParams base = waveguide_from(cfg);
    json summary = json::array();
    for (double U : numbers(cfg.at("band").at("nonlinearities"), "band.nonlinearities")) {
        WaveguideParams p = base;
        p.nonlinearity = U;
        p.n_sites = integer(cfg.at("band").at("ed_sites"), "band.ed_sites");
        p.phonon_loss = 0.0;
        const auto s = exact_two_excitation_spectrum(p);
        auto ks = momentum_grid(p.n_sites);
        std::sort(ks.begin(), ks.end());
        CsvTable t;
        t.comments = {{"n_sites", std::to_string(p.n_sites)}, {"J", format_number(p.hopping)},
                      {"U", format_number(U)}, {"omega_r", format_number(p.base_frequency)},
                      {"boundary", "periodic"}};
        t.header = {"K", "E_K_analytic", "E_K_numeric", "lambda_K"};
        double dev = 0.0;
        for (double K : ks) {
            const double ea = bound_state_energy(K, p);
            const double en = numeric_bound_energy(s, K, p);
            dev = std::max(dev, std::abs(ea - en));
            t.rows.push_back({K, ea, en, localization_length(K, p)});
        }
        const std::string name = "band_U" + label(U) + ".csv";
        out.csv(name, t);
        summary.push_back({{"U", U},
                           {"n_sites", p.n_sites},
                           {"dimension", s.dimension},
                           {"bound_states", s.bound_count()},
                           {"max_abs_deviation", dev},
                           {"gap_at_K0", scattering_band_bottom(0.0, p) - bound_state_energy(0.0, p)},
                           {"file", name}});
    }
    return {{"bands", summary}};
}

inline json correlation_experiment(const json& cfg, ArtifactWriter& out) {
    const WaveguideParams base = waveguide_from(cfg);
    const json& c = cfg.at("correlation");
    const auto opt = correlation_options_from(cfg);
    const int r_max = integer(c.at("r_max"), "correlation.r_max");
    const bool resonant = c.at("resonant").get<bool>();
    const std::vector<double> Us =
        c.at("nonlinearities").is_null() ? std::vector<double>{base.nonlinearity} : numbers(c.at("nonlinearities"), "");

    json summary = json::array();
    for (double U : Us) {
        WaveguideParams p = base;
        p.nonlinearity = U;
        std::vector<double> Ks;
        if (c.at("momenta").is_null()) Ks.push_back(solve_K0(spins_from(cfg, p), p));
        else Ks = numbers(c.at("momenta"), "correlation.momenta");

        CsvTable t;
        t.comments = {{"U", format_number(U)}, {"J", format_number(p.hopping)}, {"k_points", std::to_string(opt.k_points)},
                      {"omega_e", resonant ? "E_K/2 (resonant)" : format_number(spins_from(cfg, p).frequency)}};
        t.header = {"K", "r", "f"};
        for (double K : Ks) {
            SpinEnsemble e;
            e.positions = {0};
            if (resonant) {
                e.frequency = resonant_spin_frequency(K, p);
            } else {
                e = spins_from(cfg, p);
            }
            json entry{{"U", U}, {"K", K}, {"omega_e", e.frequency}};
            if (!(e.frequency - p.base_frequency < -2.0 * p.hopping)) {
                entry["skipped"] = "omega_e inside the single-phonon band";
                summary.push_back(entry);
                continue;
            }
            std::vector<double> f;
            for (int r = -r_max; r <= r_max; ++r) {
                f.push_back(two_phonon_correlation(K, r, e, p, opt));
                t.rows.push_back({K, static_cast<double>(r), f.back()});
            }
            const double f0 = f[static_cast<std::size_t>(r_max)];
            json ratios = json::array();
            for (int r = 0; r <= r_max; ++r) ratios.push_back(f[static_cast<std::size_t>(r_max + r)] / f0);
            entry["f0"] = f0;
            entry["f_over_f0"] = ratios;
            summary.push_back(entry);
        }
        out.csv("correlation_U" + label(U) + ".csv", t);
    }

    json result{{"correlations", summary}};
    if (c.at("momenta").is_null()) {
        const SpinEnsemble e = spins_from(cfg, base);
        const RateMatrix R = pairwise_rate_matrix(e, base, opt);
        json A_re = json::array(), A_im = json::array();
        for (const auto& a : R.A) {
            A_re.push_back(a.real());
            A_im.push_back(a.imag());
        }
        out.json_file("rate_matrix.json", {{"index_order", "flat index ((i*N + j)*N + k)*N + l over spins i,j,k,l"},
                                           {"n_spins", R.n_spins},
                                           {"positions", e.positions},
                                           {"K0", R.K0},
                                           {"vg", R.vg},
                                           {"Gamma0", R.Gamma0},
                                           {"markov_ratio", R.markov_ratio},
                                           {"A_re", A_re},
                                           {"A_im", A_im},
                                           {"Gamma", R.Gamma},
                                           {"Ucoh", R.Ucoh},
                                           {"warnings", R.warnings}});
        result["K0"] = R.K0;
        result["Gamma0"] = R.Gamma0;
    }
    return result;
}

inline json decay_experiment(const json& cfg, ArtifactWriter& out) {
    const WaveguideParams p = waveguide_from(cfg);
    const SpinEnsemble base = spins_from(cfg, p);
    const json& d = cfg.at("decay");
    const double t_max = t_max_from(cfg).value_or(5.0 / p.hopping);
    const auto grid = linspace(0.0, t_max, t_points_from(cfg));
    FullOptions fo;
    fo.ode.rtol = num(cfg.at("numerics").at("tolerance"), "numerics.tolerance");
    double fit_from = 0.0, fit_to = t_max;
    if (!d.at("fit_window").is_null()) {
        const auto w = numbers(d.at("fit_window"), "decay.fit_window");
        fit_from = w[0];
        fit_to = w[1];
    }

    std::vector<std::pair<std::string, SpinEnsemble>> runs;
    if (d.at("separations").is_null()) {
        runs.emplace_back("decay", base);
    } else {
        const int n0 = base.positions.empty() ? 0 : base.positions[0];
        for (int r : integers(d.at("separations"), "decay.separations")) {
            SpinEnsemble e = base;
            e.positions = {n0, (n0 + r) % p.n_sites};
            runs.emplace_back("decay_r" + std::to_string(r), e);
        }
    }
    if (d.at("single_spin").get<bool>()) {
        SpinEnsemble e = base;
        e.positions = {base.positions.at(0)};
        runs.emplace_back("decay_single", e);
    }

    json results = json::array();
    for (const auto& [name, e] : runs) {
        TimeSeries ts = evolve_full(e, p, grid, fo);
        json entry{{"name", name}, {"positions", e.positions}, {"P_e_final", ts.column("P_e").back()}};
        try {
            const auto fit = fit_exponential_rate(ts, fit_from, fit_to);
            entry["fit"] = {{"rate", fit.rate}, {"r_squared", fit.r_squared}, {"exponential", fit.exponential},
                            {"window", {fit_from, fit_to}}};
        } catch (const Error& err) {
            entry["fit"] = {{"error", err.what()}};
        }
        if (e.size() == 2) {
            const int r = std::abs(e.positions[0] - e.positions[1]);
            try {
                const RateMatrix R = pairwise_rate_matrix(e, p, correlation_options_from(cfg));
                entry["markov_rate"] = R.two_spin_rate();
                entry["K0"] = R.K0;
                entry["markov_ratio"] = R.markov_ratio;
                entry["warnings"] = R.warnings;
            } catch (const Error& err) {
                entry["markov_rate"] = nullptr;
                entry["markov_rate_error"] = err.what();
            }
            if (d.at("reduced").get<bool>() && r == 0) {
                const TimeSeries red = evolve_reduced({}, e, p, grid);
                double dev = 0.0;
                for (std::size_t i = 0; i < grid.size(); ++i)
                    dev = std::max(dev, std::abs(red.column("P_e")[i] - ts.column("P_e")[i]));
                out.csv(name + "_reduced.csv", red);
                entry["reduced_max_abs_deviation"] = dev;
                entry["reduced_warnings"] = red.warnings;
            }
        }
        out.csv(name + ".csv", ts);
        results.push_back(entry);
    }
    return {{"runs", results}};
}

inline std::vector<std::pair<std::string, SpinEnsemble>> lindblad_runs(const json& cfg, const WaveguideParams& p) {
    const SpinEnsemble base = spins_from(cfg, p);
    std::vector<std::pair<std::string, SpinEnsemble>> runs;
    const json& seps = cfg.at("lindblad").at("separations");
    const int n = integer(cfg.at("lindblad").at("n_spins"), "lindblad.n_spins");
    if (seps.is_null()) {
        runs.emplace_back("run", base);
    } else {
        for (int r : integers(seps, "lindblad.separations")) {
            SpinEnsemble e = base;
            e.positions.clear();
            for (int j = 0; j < n; ++j) e.positions.push_back(j * r);
            runs.emplace_back("r" + std::to_string(r), e);
        }
    }
    return runs;
}

inline json lindblad_experiment(const json& cfg, ArtifactWriter& out, bool analyse_dark_states,
                                const std::string& prefix = "lindblad_") {
    const WaveguideParams p = waveguide_from(cfg);
    const double lifetimes = num(cfg.at("lindblad").at("lifetimes"), "lindblad.lifetimes");
    json results = json::array();
    for (const auto& [tag, e] : lindblad_runs(cfg, p)) {
        const std::string name = prefix + tag;
        const RateMatrix R = pairwise_rate_matrix(e, p, correlation_options_from(cfg));
        const Lindbladian L = build_pair_liouvillian(R);
        const DensityMatrix rho0 = DensityMatrix::fully_excited(e.size());
        const double same_site = R.Gamma0 * std::pow(R.f_by_separation.at(0), 2);
        json entry{{"name", name}, {"positions", e.positions}, {"K0", R.K0}, {"Gamma0", R.Gamma0},
                   {"same_site_rate", same_site}, {"warnings", R.warnings}};

        double t_max = t_max_from(cfg).value_or(lifetimes / same_site);
        if (analyse_dark_states && cfg.at("subradiance").at("plateau").get<bool>() && e.size() <= 5) {
            const auto pred = predict_plateau(L, rho0);
            const double tp = plateau_time(same_site, pred.slowest_rate);
            if (!t_max_from(cfg)) t_max = tp;
            entry["plateau_predicted"] = pred.excited_fraction;
            entry["kernel_dimension"] = pred.kernel_dimension;
            entry["slowest_rate"] = pred.slowest_rate;
            entry["plateau_time"] = tp;
        }
        const auto grid = linspace(0.0, t_max, t_points_from(cfg));
        const auto res = evolve_density_matrix(rho0, L, grid);
        TimeSeries ts = res.series;
        ts.metadata.insert(ts.metadata.begin(), {{"positions", json(e.positions).dump()},
                                                 {"U", format_number(p.nonlinearity)},
                                                 {"omega_e", format_number(e.frequency)},
                                                 {"g", format_number(e.coupling)}});
        out.csv(name + ".csv", ts);
        entry["method"] = res.method;
        entry["P_e_final"] = ts.column("P_e").back();
        entry["t_max"] = t_max;
        entry["max_trace_error"] = res.worst.trace_error;
        entry["max_hermiticity_error"] = res.worst.hermiticity_error;
        entry["min_eigenvalue"] = res.worst.min_eigenvalue;

        if (analyse_dark_states) {
            const auto dark = find_subradiant_states(L, e.size(), Eigen::VectorXcd(rho0.rho.col(rho0.dim() - 1)));
            json ds = json::array();
            for (const auto& s : dark)
                ds.push_back({{"excitations", s.excitations},
                              {"energy", s.energy},
                              {"initial_overlap", s.initial_overlap},
                              {"symmetric_weight", s.symmetric_weight}});
            out.json_file(name + "_dark_states.json", ds);
            entry["dark_states"] = static_cast<int>(dark.size());
        }
        results.push_back(entry);
    }
    return {{"runs", results}};
}

// Two spins at K0 = 0.46 pi, U = 4J (panel a), then equally spaced quartets (panel b).
inline json fig5_experiment(const json& cfg, ArtifactWriter& out) {
    json a = cfg;
    a["waveguide"]["nonlinearity"] = 4.0;
    a["spins"]["K0"] = 0.46 * pi;
    a["lindblad"]["n_spins"] = 2;
    a["lindblad"]["separations"] = {2, 3, 4};
    a["subradiance"]["plateau"] = false;
    validate_config("subradiance", a);
    json summary;
    summary["pairs"] = lindblad_experiment(a, out, true, "fig5a_");
    summary["quartets"] = lindblad_experiment(cfg, out, true, "fig5b_");
    return summary;
}

inline json dicke_experiment(const json& cfg, ArtifactWriter& out) {
    const json& d = cfg.at("dicke");
    const int N = integer(d.at("n_spins"), "dicke.n_spins");
    const double rate = num(d.at("rate"), "dicke.rate");
    const int npts = integer(d.at("t_points"), "dicke.t_points");
    const auto levels = numbers(d.at("snapshot_levels"), "dicke.snapshot_levels");
    json results = json::array();
    std::map<LadderKind, double> half;
    for (LadderKind kind : ladder_kinds_from(cfg)) {
        const std::string k = to_string(kind);
        const double t_max = t_max_from(cfg).value_or(default_dicke_t_max(kind, N, rate));
        const auto grid = linspace(0.0, t_max, npts);
        const auto first = dicke_evolve(kind, N, rate, grid);
        const auto snap_t = default_snapshot_times(first.series, levels);
        const auto res = dicke_evolve(kind, N, rate, grid, snap_t);
        out.csv("dicke_" + k + ".csv", res.series);

        json entry{{"kind", k}, {"N", N}, {"rate", rate}, {"t_max", t_max},
                   {"peak_emission_rate", peak_emission_rate(res.series)}};
        try {
            half[kind] = half_emission_time(res.series);
            entry["half_emission_time"] = half[kind];
        } catch (const Error& err) {
            entry["half_emission_time"] = nullptr;
            entry["half_emission_error"] = err.what();
        }
        if (d.at("mean_field").get<bool>()) {
            const auto mf = mean_field_evolve(kind, N, rate, grid);
            out.csv("meanfield_" + k + ".csv", mf);
            entry["mean_field_deviation"] = mean_field_deviation(res.series, mf, N);
        }
        const auto reports = distribution_snapshot_report(res.snapshots);
        json snaps = json::array();
        for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
            const auto& s = res.snapshots[i];
            CsvTable t;
            t.comments = {{"kind", k}, {"N", std::to_string(N)}, {"t", format_number(s.time)},
                          {"P_e", format_number(s.excited_fraction)}};
            t.header = {"m", "p_m"};
            for (std::size_t j = 0; j < s.populations.size(); ++j)
                t.rows.push_back({s.m(static_cast<int>(j)), s.populations[j]});
            const std::string name = "snapshot_" + k + "_" + std::to_string(i) + ".csv";
            out.csv(name, t);
            const auto& r = reports[i];
            snaps.push_back({{"file", name},
                             {"t", r.time},
                             {"P_e", r.excited_fraction},
                             {"argmax_m", r.argmax_m},
                             {"bimodal", r.bimodal},
                             {"interior_mass", r.interior_mass},
                             {"max_interior_ratio", r.max_interior_ratio},
                             {"p_top", r.p_top},
                             {"p_bottom", r.p_bottom},
                             {"odd_offset_max", r.odd_offset_max}});
        }
        entry["snapshots"] = snaps;
        results.push_back(entry);
    }
    json summary{{"runs", results}};
    if (half.count(LadderKind::superradiance) && half.count(LadderKind::supercorrelated))
        summary["half_time_ratio"] = half[LadderKind::superradiance] / half[LadderKind::supercorrelated];
    return summary;
}

inline json grouped_experiment(const json& cfg, ArtifactWriter& out) {
    const WaveguideParams p = waveguide_from(cfg);
    const json& g = cfg.at("grouped");
    GroupedOptions o;
    o.coupling = num(cfg.at("spins").at("coupling"), "spins.coupling");
    o.K0 = num(g.at("K0"), "grouped.K0");
    o.t_points = integer(g.at("t_points"), "grouped.t_points");
    o.t_max_in_lifetimes = num(g.at("lifetimes"), "grouped.lifetimes");
    json results = json::array();
    for (double U : numbers(g.at("nonlinearities"), "grouped.nonlinearities")) {
        const auto rep = grouped_superradiance_experiment(U, p, o);
        CsvTable t;
        t.comments = {{"positions", "[0,0,4,4]"}, {"U", format_number(U)}, {"K0", format_number(rep.K0)},
                      {"Gamma", format_number(rep.Gamma)}, {"Gamma_D", format_number(rep.Gamma_D)}};
        t.header = {"t", "P_e_pair_master", "P_e_two_group", "abs_deviation"};
        for (std::size_t i = 0; i < rep.times.size(); ++i)
            t.rows.push_back({rep.times[i], rep.full[i], rep.reduced[i], std::abs(rep.full[i] - rep.reduced[i])});
        const std::string name = "grouped_U" + label(U) + ".csv";
        out.csv(name, t);
        results.push_back({{"params", {{"U", U}, {"K0", rep.K0}, {"omega_e", rep.omega_e}, {"g", o.coupling},
                                       {"positions", {0, 0, 4, 4}}}},
                           {"Gamma", rep.Gamma},
                           {"Gamma_D", rep.Gamma_D},
                           {"f4_over_f0", rep.f4_over_f0},
                           {"deviation_max", rep.deviation_max},
                           {"deviation_L2", rep.deviation_L2},
                           {"curves", name},
                           {"warnings", rep.warnings}});
    }
    out.json_file("grouped_report.json", results);
    return {{"runs", results}};
}

inline json feasibility_experiment(const json& cfg, ArtifactWriter& out) {
    const WaveguideParams p = waveguide_from(cfg);
    DimensionlessInputs d;
    d.coupling = num(cfg.at("spins").at("coupling"), "spins.coupling");
    d.nonlinearity = p.nonlinearity;
    d.phonon_loss = p.phonon_loss;
    d.t_max = t_max_from(cfg).value_or(5.0);
    const auto r = feasibility_report(physical_units_from(cfg), d);
    auto reading = [](const JReading& j) {
        return json{{"label", j.label}, {"J", j.J}, {"J_over_2pi", j.J_over_2pi}, {"t_max", j.t_max},
                    {"g", j.g}, {"U", j.U}, {"kappa", j.kappa}};
    };
    json rep{{"omega_r", r.omega_r},
             {"omega_r_over_2pi", r.omega_r_over_2pi},
             {"omega_r_relative_error", r.omega_r_relative_error},
             {"kappa", r.kappa},
             {"kappa_over_2pi", r.kappa_over_2pi},
             {"mass", r.mass},
             {"zero_point_motion", r.zero_point_motion},
             {"thermal_occupation", r.thermal_occupation},
             {"T1", r.T1},
             {"T2", r.T2},
             {"J_readings", {reading(r.from_frequency), reading(r.from_time)}},
             {"J_ratio", r.J_ratio},
             {"J_consistent", r.J_consistent},
             {"g_over_J_physical", r.g_over_J_physical},
             {"flags", r.flags}};
    out.json_file("feasibility.json", rep);
    return rep;
}

inline std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace detail

struct RunResult {
    std::filesystem::path output;
    std::vector<std::string> files;
    json summary;
};

// Validates, then runs `experiment` with a fully resolved config.
inline RunResult run(const std::string& experiment, const json& cfg) {
    validate_config(experiment, cfg);
    const std::filesystem::path dir = cfg.at("output").get<std::string>();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("io", "cannot create output directory " + dir.string() + ": " + ec.message());

    ArtifactWriter out(dir);
    json manifest{{"status", "incomplete"}, {"experiment", experiment}, {"config", cfg}, {"files", json::array()},
                  {"run_info", {{"started_utc", detail::utc_now()}}}};
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

    json summary;
    try {
        const std::string& e = experiment;
        if (e == "band" || e == "fig2") summary = detail::band_experiment(cfg, out);
        else if (e == "correlation" || e == "fig3") summary = detail::correlation_experiment(cfg, out);
        else if (e == "decay" || e == "fig4") summary = detail::decay_experiment(cfg, out);
        else if (e == "lindblad") summary = detail::lindblad_experiment(cfg, out, false);
        else if (e == "subradiance") summary = detail::lindblad_experiment(cfg, out, true, "subradiance_");
        else if (e == "fig5") summary = detail::fig5_experiment(cfg, out);
        else if (e == "dicke" || e == "fig6" || e == "fig7") summary = detail::dicke_experiment(cfg, out);
        else if (e == "grouped" || e == "fig8") summary = detail::grouped_experiment(cfg, out);
        else if (e == "feasibility") summary = detail::feasibility_experiment(cfg, out);
        out.json_file("summary.json", summary);
    } catch (const std::exception& err) {
        manifest["files"] = out.files();
        manifest["error"] = err.what();
        manifest["run_info"]["failed_utc"] = detail::utc_now();
        write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
        throw;
    }
    manifest["status"] = "complete";
    manifest["files"] = out.files();
    manifest["run_info"]["finished_utc"] = detail::utc_now();
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return {dir, out.files(), summary};
}

} // namespace nlwg
