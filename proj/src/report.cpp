#include "multibump/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>

#include "json.hpp"
#include "multibump/corrections.hpp"
#include "multibump/errors.hpp"
#include "multibump/field3d.hpp"
#include "multibump/interaction.hpp"
#include "multibump/radial.hpp"
#include "multibump/reduced_energy.hpp"

namespace multibump {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::set<std::string> kModes = {
    "ground-state", "corrections",    "constants",    "landscape",
    "optimize",     "assemble",       "verify-scaling", "three-system",
    "coefficient-table"};

SystemKind kind_of(const RunConfig& cfg) {
    return cfg.system == "three" ? SystemKind::ThreeComponent
                                 : SystemKind::TwoComponent;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// All file output goes through a temp-then-rename so a crashed run never
// leaves a truncated artifact behind.
void write_text(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_json_file(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

void write_binary(const fs::path& path, const std::vector<double>& values) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

// Timestamps live only here, never in report.json, so reports from repeated
// runs stay byte-identical.
void write_meta(const fs::path& dir, const std::string& mode, double seconds) {
    const std::time_t tt =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&tt, &tm_utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    write_json_file(dir / "meta.json", json{{"mode", mode},
                                            {"generated_at", stamp},
                                            {"elapsed_seconds", seconds}});
}

// ---- cached pipeline stages -------------------------------------------------

fs::path cache_dir(const RunConfig& cfg) { return cfg.output_dir / "cache"; }

std::string radial_key(const RunConfig& cfg) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g_%zu", cfg.r_max, cfg.radial_n);
    return buf;
}

GroundState cached_ground_state(const RunConfig& cfg) {
    const fs::path path = cache_dir(cfg) / ("gs_" + radial_key(cfg) + ".json");
    const RadialGrid grid(cfg.r_max, cfg.radial_n);
    if (fs::exists(path)) {
        json j;
        std::ifstream(path) >> j;
        RadialProfile prof(grid, j.at("values").get<std::vector<double>>());
        const json& t = j.at("tail");
        prof.tail = FarFieldFit{t.at("amplitude").get<double>(),
                                t.at("power").get<double>(),
                                t.at("rate").get<double>(),
                                t.at("rms").get<double>()};
        return GroundState{std::move(prof), j.at("peak_value").get<double>(),
                           j.at("residual_sup").get<double>()};
    }
    GroundState gs = ground_state(grid);
    fs::create_directories(cache_dir(cfg));
    const FarFieldFit& t = *gs.profile.tail;
    write_json_file(path, json{{"values", gs.profile.values},
                               {"peak_value", gs.peak_value},
                               {"residual_sup", gs.residual_sup},
                               {"tail",
                                {{"amplitude", t.amplitude},
                                 {"power", t.power},
                                 {"rate", t.rate},
                                 {"rms", t.rms}}}});
    return gs;
}

InteractionConstants cached_constants(const RunConfig& cfg) {
    const fs::path path =
        cache_dir(cfg) / ("constants_" + radial_key(cfg) + ".json");
    if (fs::exists(path)) {
        json j;
        std::ifstream(path) >> j;
        return InteractionConstants{
            j.at("attraction").get<double>(), j.at("cross").get<double>(),
            j.at("origin").get<double>(), j.at("amplitude").get<double>()};
    }
    const InteractionConstants c = measure_constants(cached_ground_state(cfg));
    fs::create_directories(cache_dir(cfg));
    write_json_file(path, json{{"attraction", c.attraction},
                               {"cross", c.cross},
                               {"origin", c.origin},
                               {"amplitude", c.amplitude}});
    return c;
}

// mu used for a given system/ell row in the battery modes: the three-system
// ell=2 window requires mu > 1, so the configured value is kept only when it
// already satisfies that bound.
double row_mu(const RunConfig& cfg, SystemKind kind, int ell) {
    if (kind == SystemKind::ThreeComponent && ell == 2)
        return cfg.mu > 1.0 ? cfg.mu : 1.5;
    return cfg.mu;
}

std::vector<double> decade_ladder() {
    std::vector<double> eps(9);
    for (int i = 0; i < 9; ++i) eps[static_cast<std::size_t>(i)] = std::pow(10.0, -4 - i);
    return eps;
}

// Fitted coefficient of the leading |ln eps| term, reported on the same scale
// as the table's prediction: separation slope m/(m-n) for rings, radius slope
// for the three-system ell=2 case.
struct CoefficientRow {
    double predicted;
    double fitted;
    double rel_error;
    bool all_interior;
};

CoefficientRow coefficient_row(const RunConfig& cfg, SystemKind kind, int ell,
                               const InteractionConstants& c) {
    const ScalingFit fit =
        fit_radius_scaling(kind, ell, row_mu(cfg, kind, ell), c, decade_ladder());
    const RadiusPrediction pred = predicted_radius(kind, ell);
    CoefficientRow row{};
    if (kind == SystemKind::ThreeComponent && ell == 2) {
        row.predicted = pred.radius_coeff;
        row.fitted = fit.slope_L;
    } else {
        row.predicted = pred.separation_coeff;
        row.fitted = ring_geometry(ell).m * fit.slope_L;
    }
    row.rel_error = std::fabs(row.fitted / row.predicted - 1.0);
    row.all_interior = fit.all_interior;
    return row;
}

json window_json(const Window& w) { return json{{"lo", w.lo}, {"hi", w.hi}}; }

// ---- modes ------------------------------------------------------------------

json mode_ground_state(const RunConfig& cfg, const fs::path& dir) {
    const GroundState gs = cached_ground_state(cfg);
    std::string csv;
    csv.reserve(gs.profile.values.size() * 28);
    for (std::size_t i = 0; i < gs.profile.values.size(); ++i) {
        csv += fmt(gs.profile.grid.r(i));
        csv += ',';
        csv += fmt(gs.profile.values[i]);
        csv += '\n';
    }
    write_text(dir / "profile.csv", csv);
    const FarFieldFit& t = *gs.profile.tail;
    return json{{"peak_value", gs.peak_value},
                {"residual_sup", gs.residual_sup},
                {"grid", {{"r_max", cfg.r_max}, {"n", cfg.radial_n}}},
                {"tail",
                 {{"amplitude", t.amplitude},
                  {"power", t.power},
                  {"rate", t.rate},
                  {"rms", t.rms}}},
                {"profile_csv", "profile.csv"}};
}

json mode_corrections(const RunConfig& cfg, const fs::path& dir) {
    const GroundState gs = cached_ground_state(cfg);
    const CorrectionFamily fam = build_corrections(gs, cfg.epsilon, kind_of(cfg));
    const bool three = fam.kind == SystemKind::ThreeComponent;

    std::string csv;
    csv.reserve(cfg.radial_n * 120);
    for (std::size_t i = 0; i < cfg.radial_n; ++i) {
        csv += fmt(gs.profile.grid.r(i));
        for (std::size_t k = 0; k < 4; ++k) {
            csv += ',';
            csv += fmt(fam.u[k][i]);
            csv += ',';
            csv += fmt(fam.v[k][i]);
            if (three) {
                csv += ',';
                csv += fmt(fam.w[k][i]);
            }
        }
        csv += '\n';
    }
    write_text(dir / "orders.csv", csv);

    std::string pair;
    pair.reserve(cfg.radial_n * 60);
    for (std::size_t i = 0; i < cfg.radial_n; ++i) {
        pair += fmt(gs.profile.grid.r(i));
        pair += ',';
        pair += fmt(fam.u_eps.values[i]);
        pair += ',';
        pair += fmt(fam.v_eps.values[i]);
        pair += '\n';
    }
    write_text(dir / "pair.csv", pair);

    double sup_u1 = 0.0, sup_v2 = 0.0, sup_vw = 0.0;
    for (std::size_t i = 0; i < cfg.radial_n; ++i) {
        sup_u1 = std::max(sup_u1, std::fabs(fam.u[0][i]));
        sup_v2 = std::max(sup_v2, std::fabs(fam.v[1][i]));
        if (three)
            for (std::size_t k = 0; k < 4; ++k)
                sup_vw = std::max(sup_vw, std::fabs(fam.v[k][i] - fam.w[k][i]));
    }
    const ResidualNorms res = residual_modified(fam);
    json rep{{"epsilon", cfg.epsilon},
             {"system", cfg.system},
             {"residual", {{"u", res.res_u}, {"v", res.res_v}}},
             {"sup_first_order_u", sup_u1},
             {"sup_second_order_v", sup_v2},
             {"orders_csv", "orders.csv"},
             {"pair_csv", "pair.csv"}};
    if (three) {
        rep["residual"]["w"] = res.res_v;
        rep["sup_v_minus_w"] = sup_vw;
    }
    return rep;
}

json mode_constants(const RunConfig& cfg, const fs::path& dir) {
    (void)dir;
    const InteractionConstants c = cached_constants(cfg);
    const double two_pi_a2 = 2.0 * M_PI * c.amplitude * c.amplitude;
    return json{{"attraction", c.attraction},
                {"cross", c.cross},
                {"origin", c.origin},
                {"amplitude", c.amplitude},
                {"consistency",
                 {{"two_pi_amplitude_sq", two_pi_a2},
                  {"cross_rel_diff", std::fabs(c.cross / two_pi_a2 - 1.0)}}}};
}

json mode_landscape(const RunConfig& cfg, const fs::path& dir) {
    const InteractionConstants c = cached_constants(cfg);
    const ReducedEnergy G =
        make_reduced_energy(kind_of(cfg), cfg.ell, cfg.epsilon, cfg.mu, c);
    const Window w = G.window();
    const int n = cfg.landscape_n;
    const double step = (w.hi - w.lo) / (n - 1);
    std::string csv;
    csv.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * 60);
    for (int i = 0; i < n; ++i) {
        const double r = w.lo + step * i;
        for (int j = 0; j < n; ++j) {
            const double rho = w.lo + step * j;
            csv += fmt(r);
            csv += ',';
            csv += fmt(rho);
            csv += ',';
            csv += fmt(G(r, rho));
            csv += '\n';
        }
    }
    write_text(dir / "landscape.csv", csv);
    return json{{"ell", cfg.ell},
                {"epsilon", cfg.epsilon},
                {"mu", cfg.mu},
                {"system", cfg.system},
                {"window", window_json(w)},
                {"rows", n * n},
                {"landscape_csv", "landscape.csv"}};
}

json mode_optimize(const RunConfig& cfg, const fs::path& dir) {
    (void)dir;
    const InteractionConstants c = cached_constants(cfg);
    const ReducedEnergy G =
        make_reduced_energy(kind_of(cfg), cfg.ell, cfg.epsilon, cfg.mu, c);
    const Maximizer m = maximize_landscape(G);
    const RadiusPrediction pred = predicted_radius(kind_of(cfg), cfg.ell);
    const double L = std::fabs(std::log(cfg.epsilon));
    return json{{"ell", cfg.ell},
                {"epsilon", cfg.epsilon},
                {"mu", cfg.mu},
                {"system", cfg.system},
                {"r", m.r},
                {"rho", m.rho},
                {"value", m.value},
                {"interior", m.interior},
                {"window", window_json(m.window)},
                {"predicted",
                 {{"radius_coeff", pred.radius_coeff},
                  {"separation_coeff", pred.separation_coeff}}},
                {"radius_over_logeps", m.r / L},
                {"ratio_to_predicted", m.r / L / pred.radius_coeff}};
}

void export_field(const fs::path& dir, const std::string& name, const Field3D& f) {
    write_binary(dir / (name + ".bin"), f.values);
    const BoxGrid& g = f.grid;
    write_json_file(
        dir / (name + ".json"),
        json{{"values_file", name + ".bin"},
             {"dtype", "float64-le"},
             {"layout", "row-major, first axis outermost"},
             {"nodes", {g.n[0], g.n[1], g.n[2]}},
             {"half_widths", {g.half[0], g.half[1], g.half[2]}},
             {"spacing", {g.spacing(0), g.spacing(1), g.spacing(2)}},
             {"count", f.values.size()},
             {"slice_csv", name + "_slice.csv"},
             {"slice_x3", g.coord(2, g.n[2] / 2)}});
    const int kmid = g.n[2] / 2;
    std::string csv;
    csv.reserve(static_cast<std::size_t>(g.n[0]) * static_cast<std::size_t>(g.n[1]) * 60);
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j) {
            csv += fmt(g.coord(0, i));
            csv += ',';
            csv += fmt(g.coord(1, j));
            csv += ',';
            csv += fmt(f.values[g.index(i, j, kmid)]);
            csv += '\n';
        }
    write_text(dir / (name + "_slice.csv"), csv);
}

json mode_assemble(const RunConfig& cfg, const fs::path& dir) {
    const GroundState gs = cached_ground_state(cfg);
    const InteractionConstants c = cached_constants(cfg);
    const CorrectionFamily fam = build_corrections(gs, cfg.epsilon, kind_of(cfg));
    const ReducedEnergy G =
        make_reduced_energy(kind_of(cfg), cfg.ell, cfg.epsilon, cfg.mu, c);
    const Maximizer m = maximize_landscape(G);
    const BumpConfiguration bumps{cfg.ell, m.r, m.rho};
    const BoxGrid grid = make_box(std::max(m.r, m.rho) + 8.5, cfg.grid_n);
    const AssembledFields f = assemble_fields(fam, bumps, grid);

    export_field(dir, "u", f.u);
    export_field(dir, "v", f.v);
    if (!f.w.values.empty()) export_field(dir, "w", f.w);

    const ResidualNorms3 stencil = residual_norms(f);
    const ResidualNorms3 sharp = residual_norms(f, true);
    const SegregationReport seg = segregation_metrics(f, fam);
    json rep{{"ell", cfg.ell},
             {"epsilon", cfg.epsilon},
             {"mu", cfg.mu},
             {"system", cfg.system},
             {"r", m.r},
             {"rho", m.rho},
             {"grid",
              {{"nodes", cfg.grid_n},
               {"half_width", grid.half[0]},
               {"spacing", grid.spacing(0)}}},
             {"far_field_used", f.far_field_used},
             {"energy", energy_box(f)},
             {"residual",
              {{"stencil", {{"u", stencil.u}, {"v", stencil.v}}},
               {"profile", {{"u", sharp.u}, {"v", sharp.v}}}}},
             {"segregation",
              {{"linf_shift_diff", seg.linf_shift_diff},
               {"l2_shift_diff", seg.l2_shift_diff},
               {"min_cross_distance_over_logeps",
                seg.min_cross_distance_over_logeps}}}};
    if (!f.w.values.empty()) {
        rep["residual"]["stencil"]["w"] = stencil.w;
        rep["residual"]["profile"]["w"] = sharp.w;
    }
    return rep;
}

json mode_verify_scaling(const RunConfig& cfg, const fs::path& dir) {
    (void)dir;
    const GroundState gs = cached_ground_state(cfg);
    const InteractionConstants c = cached_constants(cfg);
    const std::vector<double> eps =
        cfg.epsilons.empty() ? std::vector<double>{0.1, 0.05, 0.025} : cfg.epsilons;

    json ratios = json::array();
    std::vector<ResidualNorms> res;
    res.reserve(eps.size());
    for (const double e : eps)
        res.push_back(residual_modified(build_corrections(gs, e, kind_of(cfg))));
    for (std::size_t i = 0; i + 1 < eps.size(); ++i)
        ratios.push_back(
            json{{"eps_hi", eps[i]},
                 {"eps_lo", eps[i + 1]},
                 {"ratio_u", res[i].res_u / res[i + 1].res_u},
                 {"ratio_v", res[i].res_v / res[i + 1].res_v},
                 {"ratio_total", (res[i].res_u + res[i].res_v) /
                                     (res[i + 1].res_u + res[i + 1].res_v)}});

    const CoefficientRow row = coefficient_row(cfg, kind_of(cfg), cfg.ell, c);
    const ScalingFit fit = fit_radius_scaling(
        kind_of(cfg), cfg.ell, row_mu(cfg, kind_of(cfg), cfg.ell), c,
        decade_ladder());
    return json{{"system", cfg.system},
                {"ell", cfg.ell},
                {"epsilons", eps},
                {"residual_ratios", ratios},
                {"radius_fit",
                 {{"slope_logeps", fit.slope_L},
                  {"slope_loglog", fit.slope_logL},
                  {"intercept", fit.intercept},
                  {"all_interior", fit.all_interior},
                  {"predicted_coefficient", row.predicted},
                  {"fitted_coefficient", row.fitted},
                  {"rel_error", row.rel_error}}}};
}

json mode_three_system(const RunConfig& cfg, const fs::path& dir) {
    (void)dir;
    const InteractionConstants c = cached_constants(cfg);
    json rep{{"epsilon", cfg.epsilon}};

    // ell = 2: no cross-family repulsion survives; radius grows like |ln eps|
    // itself. Window needs mu > 1.
    {
        const double mu2 = row_mu(cfg, SystemKind::ThreeComponent, 2);
        const ReducedEnergy G = make_reduced_energy(SystemKind::ThreeComponent, 2,
                                                    cfg.epsilon, mu2, c);
        const Maximizer m = maximize_landscape(G);
        const CoefficientRow row =
            coefficient_row(cfg, SystemKind::ThreeComponent, 2, c);
        rep["ell2"] = json{{"mu", mu2},
                           {"r", m.r},
                           {"rho", m.rho},
                           {"value", m.value},
                           {"interior", m.interior},
                           {"window", window_json(m.window)},
                           {"radius_slope", row.fitted},
                           {"predicted_slope", row.predicted},
                           {"rel_error", row.rel_error}};
    }

    // ell = 3: the cross term is active again; the maximizer is interior on
    // the two-system window.
    {
        const ReducedEnergy G = make_reduced_energy(SystemKind::ThreeComponent, 3,
                                                    cfg.epsilon, cfg.mu, c);
        const Maximizer m = maximize_landscape(G);
        rep["ell3"] = json{{"mu", cfg.mu},
                           {"r", m.r},
                           {"rho", m.rho},
                           {"value", m.value},
                           {"interior", m.interior},
                           {"window", window_json(m.window)}};
    }

    // ell = 5: the centered bump's contribution is exponentially subordinate,
    // so the maximizer matches the two-system one.
    {
        const ReducedEnergy G3 = make_reduced_energy(SystemKind::ThreeComponent, 5,
                                                     cfg.epsilon, cfg.mu, c);
        const ReducedEnergy G2 = make_reduced_energy(SystemKind::TwoComponent, 5,
                                                     cfg.epsilon, cfg.mu, c);
        const Maximizer m3 = maximize_landscape(G3);
        const Maximizer m2 = maximize_landscape(G2);
        rep["ell5"] = json{{"mu", cfg.mu},
                           {"three_r", m3.r},
                           {"two_r", m2.r},
                           {"rel_diff", std::fabs(m3.r / m2.r - 1.0)},
                           {"interior", m3.interior}};
    }
    return rep;
}

json mode_coefficient_table(const RunConfig& cfg, const fs::path& dir) {
    const InteractionConstants c = cached_constants(cfg);
    json rows = json::array();
    std::string csv = "system,ell,predicted,fitted,rel_error\n";
    for (const std::string system : {"two", "three"}) {
        const SystemKind kind = system == "three" ? SystemKind::ThreeComponent
                                                  : SystemKind::TwoComponent;
        for (const int ell : {2, 3, 4, 5}) {
            const CoefficientRow row = coefficient_row(cfg, kind, ell, c);
            rows.push_back(json{{"system", system},
                                {"ell", ell},
                                {"predicted", row.predicted},
                                {"fitted", row.fitted},
                                {"rel_error", row.rel_error},
                                {"all_interior", row.all_interior}});
            csv += system;
            csv += ',';
            csv += std::to_string(ell);
            csv += ',';
            csv += fmt(row.predicted);
            csv += ',';
            csv += fmt(row.fitted);
            csv += ',';
            csv += fmt(row.rel_error);
            csv += '\n';
        }
    }
    write_text(dir / "table.csv", csv);
    return json{{"rows", rows}, {"table_csv", "table.csv"}};
}

json dispatch(const RunConfig& cfg, const fs::path& dir) {
    if (cfg.mode == "ground-state") return mode_ground_state(cfg, dir);
    if (cfg.mode == "corrections") return mode_corrections(cfg, dir);
    if (cfg.mode == "constants") return mode_constants(cfg, dir);
    if (cfg.mode == "landscape") return mode_landscape(cfg, dir);
    if (cfg.mode == "optimize") return mode_optimize(cfg, dir);
    if (cfg.mode == "assemble") return mode_assemble(cfg, dir);
    if (cfg.mode == "verify-scaling") return mode_verify_scaling(cfg, dir);
    if (cfg.mode == "three-system") return mode_three_system(cfg, dir);
    return mode_coefficient_table(cfg, dir);
}

}  // namespace

void validate(const RunConfig& cfg) {
    if (kModes.find(cfg.mode) == kModes.end())
        throw ConfigError("unknown mode: " + cfg.mode);
    if (cfg.system != "two" && cfg.system != "three")
        throw ConfigError("system must be 'two' or 'three', got " + cfg.system);
    if (cfg.landscape_n < 2 || cfg.landscape_n > 2000)
        throw ConfigError("landscape-n must lie in [2, 2000]");
    if (cfg.output_dir.empty()) throw ConfigError("output-dir must not be empty");
    if (cfg.mode == "verify-scaling" && !cfg.epsilons.empty()) {
        if (cfg.epsilons.size() < 2)
            throw ConfigError("verify-scaling needs at least two couplings");
        for (std::size_t i = 0; i + 1 < cfg.epsilons.size(); ++i)
            if (!(cfg.epsilons[i] > cfg.epsilons[i + 1]))
                throw ConfigError("epsilons must be strictly decreasing");
    }
}

std::string error_name(const std::exception& e) {
    if (dynamic_cast<const NoBracket*>(&e)) return "NoBracket";
    if (dynamic_cast<const GridTooCoarse*>(&e)) return "GridTooCoarse";
    if (dynamic_cast<const SingularOperator*>(&e)) return "SingularOperator";
    if (dynamic_cast<const DegenerateWindow*>(&e)) return "DegenerateWindow";
    if (dynamic_cast<const PoorFit*>(&e)) return "PoorFit";
    if (dynamic_cast<const BadMu*>(&e)) return "BadMu";
    if (dynamic_cast<const OutOfRange*>(&e)) return "OutOfRange";
    if (dynamic_cast<const BoundaryMaximum*>(&e)) return "BoundaryMaximum";
    if (dynamic_cast<const DivergedNewton*>(&e)) return "DivergedNewton";
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    return "Error";
}

int run(const RunConfig& cfg) {
    validate(cfg);
    const fs::path dir = cfg.output_dir / cfg.mode;
    fs::create_directories(dir);
    const auto t0 = std::chrono::steady_clock::now();
    json report;
    int code = 0;
    try {
        report = dispatch(cfg, dir);
    } catch (const std::exception& e) {
        report = json{{"error", error_name(e)}, {"message", e.what()}};
        code = 1;
    }
    write_json_file(dir / "report.json", report);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_meta(dir, cfg.mode, seconds);
    return code;
}

}  // namespace multibump
