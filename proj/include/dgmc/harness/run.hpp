#pragma once

// The stepping loop: advances a scenario, accumulates dissipation and the
// transport identity every step, samples diagnostics every `stride` steps,
// and evaluates the run's pass/fail criteria. Checkpoints carry the full run
// state, so a resumed run reproduces the uninterrupted one bit for bit.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dgmc/allen_cahn.hpp"
#include "dgmc/calibration.hpp"
#include "dgmc/diagnostics.hpp"
#include "dgmc/energy.hpp"
#include "dgmc/entropy.hpp"
#include "dgmc/harness/config.hpp"
#include "dgmc/harness/io.hpp"
#include "dgmc/harness/scenario.hpp"
#include "dgmc/harness/test_fields.hpp"
#include "dgmc/varifold.hpp"

namespace dgmc::harness {

/// Acceptance constants.
inline constexpr double kRadiusTol2d = 0.02;
inline constexpr double kRadiusTol3d = 0.04;
inline constexpr double kEdiTol = 0.05;
inline constexpr double kDeGiorgiTol = 0.05;
inline constexpr double kMergeSlackMin = 0.2;
inline constexpr double kVDominationFactor = 1.05;
inline constexpr double kTransportTol = 0.05;
inline constexpr double kHoelderTol = 0.1;
inline constexpr double kRangeTol = 1e-3;
/// Additive coercivity slack, in units of (h / r_c) * mass.
inline constexpr double kCoercivitySlack = 1.0;
inline constexpr int kDefaultSamples = 40;
/// A merged layer counts as annihilated once its mass is below this
/// fraction of mass(0).
inline constexpr double kAnnihilatedMass = 0.01;

struct Criterion {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    std::string relation;  // how value compares to tolerance when passing
    bool pass = true;
};

struct RunOptions {
    std::string out_dir;  // empty: no files
    int stride = 0;       // overrides the config when > 0
    bool quiet = true;
    long checkpoint_every = -1;  // overrides the config when >= 0
    std::string resume;          // checkpoint to resume from
    long stop_after = -1;        // stop (as if interrupted) after this many steps
    std::ostream* log = &std::cerr;
};

struct RunSummary {
    RunConfig config;
    std::uint64_t hash = 0;
    double dt = 0.0;
    double T_end = 0.0;
    long steps = 0;
    bool completed = false;
    std::vector<DiagnosticsRecord> records;
    std::vector<double> rho_min;  // smallest box density per sample (NaN if none)
    GronwallFit gronwall;
    bool has_gronwall = false;
    std::vector<Criterion> criteria;

    double radius_error = 0.0;       // over samples with t <= T_strong / 2
    double disc_ratio = 0.0;         // max over steps of disc_max / (tol_disc (1 + t))
    double disc_max_over_run = -INFINITY;
    double edi_max = 0.0;
    DeGiorgiReport de_giorgi;
    double hoelder_ratio = 0.0;
    std::vector<TransportTerms> transport_sharp, transport_diffuse;
    double pointwise_v_excess = -INFINITY;
    double u_min = INFINITY, u_max = -INFINITY;
    double probe_time = 0.0, probe_L1 = 0.0;  // discrepancy L1 at the first step past T_end / 2
    double coercivity_worst = -INFINITY;      // max over samples and checks of lhs - rhs
    std::string coercivity_worst_name;
    double tilt_gap = 0.0;
    double fit_slack = 0.0;
    double entropy_floor = 0.0;
    double merge_time = NAN;        // first sample with an empty phase
    double annihilation_time = NAN; // first sample after it with mass below kAnnihilatedMass * mass(0)
    double merge_slack_rel = NAN;   // slack(0, t_annihilation) / mass(0)
    double merge_rho_min = NAN;     // smallest box density at or before the merge sample, once layers touch
    double wall_seconds = 0.0;

    bool pass() const {
        return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
    }
};

class Simulation {
public:
    explicit Simulation(RunConfig cfg, RunOptions opt = {})
        : cfg_(std::move(cfg)), opt_(std::move(opt)), sc_(make_scenario(cfg_)),
          stepper_(sc_.spec, cfg_.eps, sc_.scheme),
          transport_(transport_test_functions(sc_.spec, center(), sc_.T_end, cfg_.r0)) {
        summary_.config = cfg_;
        summary_.hash = content_hash(cfg_);
        summary_.dt = sc_.dt;
        summary_.T_end = sc_.T_end;
        total_steps_ = step_count(sc_);
        stride_ = opt_.stride > 0 ? opt_.stride : cfg_.stride;
        if (stride_ <= 0) stride_ = static_cast<int>(std::max<long>(1, total_steps_ / kDefaultSamples));
        checkpoint_every_ = opt_.checkpoint_every >= 0 ? opt_.checkpoint_every : cfg_.checkpoint_every;
        box_ = cfg_.box > 0 ? cfg_.box : default_box(sc_.spec, cfg_.eps);
        tol_disc_ = discrepancy_tolerance(sc_.spec.h(), cfg_.eps);
        if (sc_.sphere) {
            const auto av = analytic_varifold(*sc_.sphere, 0.0, sc_.spec);
            summary_.entropy_floor = relative_entropy(av, calibration_fields(*sc_.sphere, 0.0, sc_.spec));
            summary_.fit_slack = 3.0 * summary_.entropy_floor;
        }
    }

    const Scenario& scenario() const { return sc_; }
    int stride() const { return stride_; }
    long total_steps() const { return total_steps_; }

    RunSummary run() {
        const auto t0 = std::chrono::steady_clock::now();
        if (!opt_.resume.empty()) {
            load_checkpoint(opt_.resume);
        } else {
            begin();
        }
        while (step_ < total_steps_) {
            if (opt_.stop_after >= 0 && steps_this_call_ >= opt_.stop_after) break;
            advance();
            if (step_ % stride_ == 0 || step_ == total_steps_) sample();
            if (checkpoint_every_ > 0 && step_ % checkpoint_every_ == 0 && !opt_.out_dir.empty()) {
                save_checkpoint(opt_.out_dir + "/checkpoint.bin");
            }
        }
        summary_.completed = step_ == total_steps_;
        if (summary_.completed) finish();
        summary_.steps = step_;
        summary_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!opt_.out_dir.empty()) write_outputs();
        return summary_;
    }

    /// Serialized full run state: checkpoint header and field, then the trailer.
    std::vector<unsigned char> checkpoint_bytes() const {
        ByteWriter w;
        write_state(w, cur_);
        w.bytes("DGRS", 4);
        w.u64(content_hash(cfg_));
        w.i64(step_);
        w.f64(dV_);
        w.f64(dVac_);
        w.f64(dH_);
        w.f64(summary_.disc_ratio);
        w.f64(summary_.disc_max_over_run);
        w.f64(summary_.pointwise_v_excess);
        w.f64(summary_.u_min);
        w.f64(summary_.u_max);
        w.f64(summary_.probe_time);
        w.f64(summary_.probe_L1);
        w.u32(probe_done_ ? 1 : 0);
        w.f64(summary_.radius_error);
        w.f64(summary_.coercivity_worst);
        w.f64(summary_.tilt_gap);
        w.u64(summary_.records.size());
        for (const auto& r : summary_.records) {
            w.f64s({r.t, r.E_eps, r.mass, r.dissip_V, r.dissip_V_ac, r.dissip_H, r.disc_L1, r.disc_max, r.volume,
                    r.volume_sigma, r.de_giorgi_slack, r.edi_residual, r.E_rel, r.E_bulk, r.tilt, r.rho_defect});
        }
        w.f64s(summary_.rho_min);
        w.u64(phases_.size());
        for (const auto& p : phases_) {
            w.u64(p.words.size());
            for (auto x : p.words) w.u64(x);
        }
        const auto snap = transport_.snapshot();
        w.u64(snap.sharp.size());
        for (std::size_t j = 0; j < snap.sharp.size(); ++j) {
            for (const auto* t : {&snap.sharp[j], &snap.diffuse[j]}) {
                w.f64s({t->end_term, t->start_term, t->time_term, t->speed_term, t->max_abs_term});
            }
        }
        w.i64(snap.steps);
        w.u32(static_cast<std::uint32_t>(summary_.coercivity_worst_name.size()));
        w.bytes(summary_.coercivity_worst_name.data(), summary_.coercivity_worst_name.size());
        w.u64(psis_.size());
        for (const auto& p : psis_) w.f64s(p.data);
        return w.data();
    }

    void save_checkpoint(const std::string& path) const { write_file(path, checkpoint_bytes()); }

private:
    std::array<double, 3> center() const {
        return {0.5 * cfg_.L, 0.5 * cfg_.L, 0.5 * cfg_.L};
    }

    void begin() {
        cur_ = sc_.initial;
        step_ = 0;
        transport_.start(cur_);
        track_state(cur_);
        sample();
    }

    void track_state(const DiffuseState& s) {
        const auto [mn, mx] = std::minmax_element(s.u.data.begin(), s.u.data.end());
        summary_.u_min = std::min(summary_.u_min, *mn);
        summary_.u_max = std::max(summary_.u_max, *mx);
        const auto d = discrepancy(s.u, s.eps);
        summary_.disc_max_over_run = std::max(summary_.disc_max_over_run, d.max);
        summary_.disc_ratio = std::max(summary_.disc_ratio, d.max / (tol_disc_ * (1.0 + s.time)));
        if (!probe_done_ && s.time >= 0.5 * sc_.T_end) {
            summary_.probe_time = s.time;
            summary_.probe_L1 = d.L1;
            probe_done_ = true;
        }
    }

    void advance() {
        DiffuseState next = stepper_.step(cur_, step_);
        const double dt = sc_.dt;
        const StepDissipation sd = step_dissipation(cur_, next, dt);
        dV_ += dt * sd.V;
        dVac_ += dt * sd.Vac;
        dH_ += dt * sd.H;
        summary_.pointwise_v_excess = std::max(summary_.pointwise_v_excess, sd.pointwise_excess);
        transport_.add_step(next, sd.speed, sd.weight, dt);
        cur_ = std::move(next);
        ++step_;
        ++steps_this_call_;
        track_state(cur_);
    }

    void sample() {
        const GridSpec& spec = sc_.spec;
        DiagnosticsRecord r;
        r.t = cur_.time;
        r.E_eps = energy(cur_.u, cur_.eps);
        const DiscreteVarifold v = build_varifold(cur_);
        r.mass = v.mass();
        r.dissip_V = dV_;
        r.dissip_V_ac = dVac_;
        r.dissip_H = dH_;
        const auto d = discrepancy(cur_.u, cur_.eps);
        r.disc_L1 = d.L1;
        r.disc_max = d.max;
        const PhaseIndicator chi = phase_indicator(cur_.u);
        r.volume = chi.volume();
        r.volume_sigma = v.sigma * r.volume;
        phases_.push_back(PhaseBits::from(chi));
        if (!sc_.well_prepared) psis_.push_back(psi_field(cur_.u));

        double rho_min = NAN;
        if (sc_.sphere) {
            const auto mult = multiplicity_field(v, chi, box_, cfg_.eps);
            for (std::size_t b = 0; b < mult.rho.size(); ++b) {
                if (!mult.empty[b]) rho_min = std::isnan(rho_min) ? mult.rho[b] : std::min(rho_min, mult.rho[b]);
            }
            const double t = std::min(cur_.time, sc_.sphere->t_strong());
            if (sc_.kind != ScenarioKind::MultiplicityTwo) {
                const auto cal = calibration_fields(*sc_.sphere, t, spec);
                const EntropyRecord er = coercivity_report(v, chi, cal, *sc_.sphere, mult);
                r.E_rel = er.E_rel;
                r.E_bulk = er.E_bulk;
                r.tilt = er.tilt_excess;
                r.rho_defect = er.multiplicity_defect;
                const double slack = kCoercivitySlack * spec.h() / cfg_.r_c * er.mass;
                for (const auto& c : coercivity_checks(er, slack)) {
                    if (c.lhs - c.rhs > summary_.coercivity_worst) {
                        summary_.coercivity_worst = c.lhs - c.rhs;
                        summary_.coercivity_worst_name = c.name;
                    }
                }
                summary_.tilt_gap = std::max(summary_.tilt_gap, er.tilt_identity_gap);

                if (t <= 0.5 * sc_.sphere->t_strong()) {
                    const double r_meas = cfg_.dim == 2 ? std::sqrt(r.volume / std::numbers::pi)
                                                        : std::cbrt(3.0 * r.volume / (4.0 * std::numbers::pi));
                    ClassicalSphere ref = *sc_.sphere;
                    if (sc_.kind == ScenarioKind::PerturbedCircle) ref.r0 += cfg_.delta * cfg_.eps;
                    const double r_exact = ref.radius(t);
                    summary_.radius_error = std::max(summary_.radius_error, std::abs(r_meas / r_exact - 1.0));
                }
            }
        }
        summary_.rho_min.push_back(rho_min);
        if (!summary_.records.empty()) {
            r.de_giorgi_slack = de_giorgi_slack(summary_.records.front(), r);
            r.edi_residual = edi_residual(summary_.records.front(), r);
        }
        summary_.records.push_back(r);
        if (!opt_.quiet && opt_.log) {
            *opt_.log << "step " << step_ << "/" << total_steps_ << " t=" << format_number(r.t)
                      << " E=" << format_number(r.E_eps) << " mass=" << format_number(r.mass) << "\n";
        }
    }

    void finish() {
        auto& s = summary_;
        s.criteria.clear();
        auto add = [&](std::string name, double value, double tol, std::string rel, bool pass) {
            s.criteria.push_back({std::move(name), value, tol, std::move(rel), pass});
        };
        const bool sphere_flow = sc_.sphere && sc_.kind != ScenarioKind::MultiplicityTwo;

        if (sphere_flow) {
            const double tol = cfg_.dim == 3 ? kRadiusTol3d : kRadiusTol2d;
            add("radius law", s.radius_error, tol, "<=", s.radius_error <= tol);
        }
        s.edi_max = edi_check(s.records).value;
        add("energy-dissipation identity", s.edi_max, kEdiTol, "<", s.edi_max < kEdiTol);

        s.de_giorgi = de_giorgi_check(s.records);
        add("De Giorgi inequality", s.de_giorgi.min_rel(), -kDeGiorgiTol, ">=", s.de_giorgi.pass(kDeGiorgiTol));

        if (sc_.well_prepared) {
            add("discrepancy bound", s.disc_ratio, 1.0, "<=", s.disc_ratio <= 1.0);
            const double range = std::max(-s.u_min, s.u_max - 1.0);
            add("maximum range", range, kRangeTol, "<=", range <= kRangeTol);
            const double ratio = dVac_ > 0.0 ? dV_ / dVac_ : 0.0;
            const bool applies = s.disc_ratio <= 1.0;
            add("V domination", ratio, kVDominationFactor, "<=", !applies || ratio <= kVDominationFactor);
        }

        s.transport_sharp.clear();
        s.transport_diffuse.clear();
        for (std::size_t j = 0; j < transport_.size(); ++j) {
            s.transport_sharp.push_back(transport_.sharp(j));
            s.transport_diffuse.push_back(transport_.diffuse(j));
        }
        if (sc_.well_prepared) {
            double worst = 0.0;
            for (const auto& t : s.transport_sharp) worst = std::max(worst, t.residual());
            add("transport identity", worst, kTransportTol, "<", worst < kTransportTol);
        }

        std::vector<double> times;
        for (const auto& r : s.records) times.push_back(r.t);
        const double mass0 = s.records.front().mass;
        s.hoelder_ratio = sc_.well_prepared
                              ? volume_continuity_check(times, phases_, mass0, sc_.spec.cell_volume()).value
                              : diffuse_volume_continuity_check(times, psis_, s.records.front().E_eps).value;
        add("volume Hoelder continuity", s.hoelder_ratio, 1.0 + kHoelderTol, "<=", s.hoelder_ratio <= 1.0 + kHoelderTol);

        if (sphere_flow) {
            add("coercivity", s.coercivity_worst, 0.0, "<=", s.coercivity_worst <= 0.0);
            add("tilt identity", s.tilt_gap, 1e-12, "<=", s.tilt_gap <= 1e-12);
            if (s.records.size() >= 10) {
                std::vector<GronwallSample> g;
                for (const auto& r : s.records) g.push_back({r.t, r.E_rel, r.E_bulk});
                s.gronwall = gronwall_monitor(g, s.fit_slack);
                s.has_gronwall = true;
                add("Gronwall fit finite", std::max(s.gronwall.C_fit_rel, s.gronwall.C_fit_bulk), INFINITY, "<",
                    s.gronwall.finite);
            }
        }

        if (sc_.kind == ScenarioKind::MultiplicityTwo) {
            // The merge is the first sample at which the phase has vanished;
            // the slack is read once the merged layer has annihilated.
            for (std::size_t k = 0; k < s.records.size(); ++k) {
                if (std::isnan(s.merge_time) && s.records[k].volume == 0.0) s.merge_time = s.records[k].t;
                if (!std::isnan(s.merge_time) && s.records[k].mass <= kAnnihilatedMass * mass0) {
                    s.annihilation_time = s.records[k].t;
                    s.merge_slack_rel = s.de_giorgi.slack_from_start[k] / mass0;
                    break;
                }
            }
            double rmin = NAN;
            for (std::size_t k = 1; k < s.records.size(); ++k) {
                if (!std::isnan(s.merge_time) && s.records[k].t > s.merge_time) break;
                if (!std::isnan(s.rho_min[k])) rmin = std::isnan(rmin) ? s.rho_min[k] : std::min(rmin, s.rho_min[k]);
            }
            s.merge_rho_min = rmin;
            add("merge observed", std::isnan(s.merge_time) ? -1.0 : s.merge_time, 0.0, ">=", !std::isnan(s.merge_time));
            add("strict De Giorgi slack after merge", s.merge_slack_rel, kMergeSlackMin, ">",
                !std::isnan(s.merge_slack_rel) && s.merge_slack_rel > kMergeSlackMin);
            add("multiplicity drop", s.merge_rho_min, 0.6, "<=", !std::isnan(rmin) && rmin <= 0.6);
        }
    }

    void write_outputs() const {
        std::filesystem::create_directories(opt_.out_dir);
        write_text(opt_.out_dir + "/diagnostics.csv", csv_text(summary_.records));
        if (!summary_.completed) save_checkpoint(opt_.out_dir + "/checkpoint.bin");
    }

    void load_checkpoint(const std::string& path) {
        ByteReader r(read_file(path));
        DiffuseState s = read_state(r, cfg_.L);
        if (s.u.spec != sc_.spec || s.eps != cfg_.eps) throw ConfigError("checkpoint does not match the configuration");
        char magic[4];
        r.bytes(magic, 4);
        if (std::memcmp(magic, "DGRS", 4) != 0) throw ConfigError("checkpoint carries no run state");
        if (r.u64() != content_hash(cfg_)) throw ConfigError("checkpoint was written for a different configuration");
        step_ = r.i64();
        dV_ = r.f64();
        dVac_ = r.f64();
        dH_ = r.f64();
        summary_.disc_ratio = r.f64();
        summary_.disc_max_over_run = r.f64();
        summary_.pointwise_v_excess = r.f64();
        summary_.u_min = r.f64();
        summary_.u_max = r.f64();
        summary_.probe_time = r.f64();
        summary_.probe_L1 = r.f64();
        probe_done_ = r.u32() != 0;
        summary_.radius_error = r.f64();
        summary_.coercivity_worst = r.f64();
        summary_.tilt_gap = r.f64();
        const std::uint64_t nrec = r.u64();
        summary_.records.clear();
        for (std::uint64_t k = 0; k < nrec; ++k) {
            const auto v = r.f64s();
            if (v.size() != 16) throw std::runtime_error("corrupt checkpoint record");
            DiagnosticsRecord d;
            d.t = v[0]; d.E_eps = v[1]; d.mass = v[2]; d.dissip_V = v[3]; d.dissip_V_ac = v[4]; d.dissip_H = v[5];
            d.disc_L1 = v[6]; d.disc_max = v[7]; d.volume = v[8]; d.volume_sigma = v[9]; d.de_giorgi_slack = v[10];
            d.edi_residual = v[11]; d.E_rel = v[12]; d.E_bulk = v[13]; d.tilt = v[14]; d.rho_defect = v[15];
            summary_.records.push_back(d);
        }
        summary_.rho_min = r.f64s();
        const std::uint64_t nph = r.u64();
        phases_.clear();
        for (std::uint64_t k = 0; k < nph; ++k) {
            PhaseBits p;
            p.words.resize(r.u64());
            for (auto& x : p.words) x = r.u64();
            phases_.push_back(std::move(p));
        }
        TransportAccumulator::Snapshot snap;
        const std::uint64_t nt = r.u64();
        for (std::uint64_t j = 0; j < nt; ++j) {
            for (auto* vec : {&snap.sharp, &snap.diffuse}) {
                const auto v = r.f64s();
                if (v.size() != 5) throw std::runtime_error("corrupt checkpoint transport terms");
                vec->push_back({v[0], v[1], v[2], v[3], v[4]});
            }
        }
        snap.steps = r.i64();
        const std::uint32_t nl = r.u32();
        summary_.coercivity_worst_name.resize(nl);
        r.bytes(summary_.coercivity_worst_name.data(), nl);
        const std::uint64_t npsi = r.u64();
        psis_.clear();
        for (std::uint64_t k = 0; k < npsi; ++k) {
            ScalarField p(sc_.spec);
            p.data = r.f64s();
            if (p.data.size() != sc_.spec.size()) throw std::runtime_error("corrupt checkpoint psi slice");
            psis_.push_back(std::move(p));
        }
        if (!r.at_end()) throw std::runtime_error("trailing bytes in checkpoint");
        cur_ = std::move(s);
        transport_.restore(cur_, snap);
        if (snap.sharp.size() != transport_.size()) throw std::runtime_error("checkpoint test-function count differs");
    }

    RunConfig cfg_;
    RunOptions opt_;
    Scenario sc_;
    AllenCahnStepper stepper_;
    TransportAccumulator transport_;
    RunSummary summary_;
    DiffuseState cur_;
    std::vector<PhaseBits> phases_;
    std::vector<ScalarField> psis_;  // psi per sample, kept only for data that are not well prepared
    long step_ = 0;
    long steps_this_call_ = 0;
    long total_steps_ = 0;
    int stride_ = 1;
    long checkpoint_every_ = 0;
    int box_ = 0;
    double tol_disc_ = 0.0;
    double dV_ = 0.0, dVac_ = 0.0, dH_ = 0.0;
    bool probe_done_ = false;
};

inline RunSummary run(const RunConfig& cfg, const RunOptions& opt = {}) { return Simulation(cfg, opt).run(); }

}  // namespace dgmc::harness
