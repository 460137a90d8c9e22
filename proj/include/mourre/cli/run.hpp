#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mourre/cli/config.hpp"
#include "mourre/commutator.hpp"
#include "mourre/hs_calculus.hpp"
#include "mourre/models/lattice.hpp"
#include "mourre/models/matrix_dump.hpp"
#include "mourre/models/spinboson.hpp"
#include "mourre/mourre.hpp"
#include "mourre/regularity.hpp"

namespace mourre::cli {

// Empty field for infinite or NaN values.
inline std::string num(double x) {
    if (!std::isfinite(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}
inline std::string num(std::optional<double> x) { return x ? num(*x) : std::string(); }

class Csv {
public:
    explicit Csv(std::string header) : header_(std::move(header)) {}
    template <class... T>
    void row(const T&... fields) {
        std::vector<std::string> cells{cell(fields)...};
        std::string line;
        for (size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
        rows_.push_back(line);
    }
    void write(const std::filesystem::path& p) const {
        std::ofstream os(p, std::ios::binary);
        if (!os) throw Error("cannot write " + p.string());
        os << header_ << '\n';
        for (const auto& r : rows_) os << r << '\n';
    }
    size_t size() const { return rows_.size(); }

private:
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(double x) { return num(x); }
    static std::string cell(std::optional<double> x) { return num(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(bool b) { return b ? "true" : "false"; }
    std::string header_;
    std::vector<std::string> rows_;
};

struct Model {
    std::string name;
    HermitianOperator H, A;
    std::optional<SpinBosonTruncation> sb;
};

inline SpinBosonParams spinboson_params(const RunConfig& c) {
    SpinBosonParams p;
    p.eps = c.eps;
    p.mass = c.mass;
    p.uv_cutoff = c.uv_cutoff;
    p.k_max = c.grid_k_max;
    p.M = c.grid_M;
    p.n_max = c.n_max;
    p.G.resize(2, 2);
    for (int i = 0; i < 4; ++i) p.G(i / 2, i % 2) = cplx(c.G_re[i], c.G_im[i]);
    return p;
}

inline Model build_model(const RunConfig& c) {
    if (c.model == "lattice") {
        auto lp = build_lattice_pair(c.sites, c.spacing);
        return {"lattice", lp.H, lp.A, std::nullopt};
    }
    if (c.model == "spinboson") {
        auto sb = build_spinboson(spinboson_params(c));
        return {"spinboson", sb.H, sb.A, sb};
    }
    Mat H = read_matrix_dump(c.H_path), A = read_matrix_dump(c.A_path);
    if (H.rows() != H.cols() || A.rows() != A.cols() || H.rows() != A.rows())
        throw ConfigError("file model: H and A must be square of equal size");
    return {"file", HermitianOperator(H, 1e-10), HermitianOperator(A, 1e-10), std::nullopt};
}

inline void export_model(const RunConfig& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto m = build_model(c);
    write_matrix_dump((dir / "H.bin").string(), m.H.matrix());
    write_matrix_dump((dir / "A.bin").string(), m.A.matrix());
}

struct RunOutcome {
    int exit_code = 0;
    std::vector<std::string> failures;
    std::vector<std::string> notes;
};

class Runner {
public:
    Runner(RunConfig cfg, std::ostream& log) : c_(std::move(cfg)), log_(log) {}

    RunOutcome run() {
        namespace fs = std::filesystem;
        if (c_.suites.empty()) throw ConfigError("empty suite list");
        fs::create_directories(c_.output_dir);
        model_ = build_model(c_);
        log_ << "model " << model_.name << " dim " << model_.H.dim() << "\n";
        pick_eigenvalue();

        if (c_.has_suite("commutators")) guard("commutators", [&] { suite_commutators(); });
        if (c_.has_suite("hs")) guard("hs", [&] { suite_hs(); });
        bool need_cert = c_.has_suite("mourre") || c_.has_suite("regularity");
        if (need_cert) guard("mourre", [&] { suite_mourre(c_.has_suite("mourre")); });
        if (c_.has_suite("regularity")) guard("regularity", [&] { suite_regularity(); });
        if (c_.has_suite("analyticity")) guard("analyticity", [&] { suite_analyticity(); });
        if (c_.has_suite("spinboson-bounds")) guard("spinboson-bounds", [&] { suite_spinboson(); });

        const fs::path out(c_.output_dir);
        regularity_.write(out / "regularity.csv");
        mourre_.write(out / "mourre.csv");
        commutators_.write(out / "commutators.csv");
        hs_.write(out / "hs.csv");
        spinboson_.write(out / "spinboson.csv");
        res_.exit_code = res_.failures.empty() ? 0 : 1;
        write_meta(out / "run_meta.txt");
        for (const auto& f : res_.failures) log_ << "FAILED " << f << "\n";
        return res_;
    }

private:
    template <class F>
    void guard(const std::string& suite, F&& f) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            f();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            fail(suite + ": " + e.what());
        }
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        timings_.push_back(suite + " " + std::to_string(s) + " s");
        log_ << "suite " << suite << " done\n";
    }
    void fail(const std::string& what) { res_.failures.push_back(what); }
    void note(const std::string& what) {
        res_.notes.push_back(what);
        log_ << "note: " << what << "\n";
    }

    void pick_eigenvalue() {
        lambda_ = nearest_eigenvalue(model_.H, c_.target, RealInterval(c_.I_lo, c_.I_hi));
        auto [l, psi] = eigenpair(model_.H, lambda_);
        lambda_ = l;
        psi_ = psi;
        log_ << "lambda " << num(lambda_) << "\n";
    }

    // --- commutators ---
    void suite_commutators() {
        std::mt19937_64 rng(c_.seed);
        auto add = [&](const std::string& check, int k, double r, double tol, bool lower_is_pass = true) {
            bool ok = lower_is_pass ? r <= tol : r >= tol;
            commutators_.row(check, k, r, tol, ok);
            if (!ok) fail("commutators: " + check + " k=" + std::to_string(k));
        };
        for (int k = 1; k <= 6; ++k) {
            std::mt19937_64 r(c_.seed + k);
            double worst = 0.0;
            for (int i = 0; i < 100; ++i) {
                auto K = random_hermitian(6, r), L = random_hermitian(6, r);
                worst = std::max(worst, power_expansion_check(K.matrix(), L.matrix(), k));
            }
            add("power_expansion_random", k, worst, c_.tol.commutator);
        }
        const double hn = model_.H.norm(), an = model_.A.norm();
        for (int k = 1; k <= 3; ++k) {
            double r = power_expansion_check(model_.H.matrix(), model_.A.matrix(), k) / (hn * std::pow(an, k) * std::pow(2.0, k));
            add("power_expansion_model", k, r, c_.tol.commutator);
        }
        for (int k = 1; k <= 4; ++k) {
            double worst = 0.0;
            for (int i = 0; i < 25; ++i) {
                int d = 4 + static_cast<int>(rng() % 13);
                auto H = random_hermitian(d, rng), A = random_hermitian(d, rng);
                worst = std::max(worst, resolvent_commutator_formula(H, A, cplx(0.3, 1.0), k).relative_residual());
            }
            add("resolvent_formula_random", k, worst, c_.tol.resolvent);
        }
        for (int k = 1; k <= 3; ++k)
            add("resolvent_formula_model", k,
                resolvent_commutator_formula(model_.H, model_.A, cplx(lambda_, 1.0), k).relative_residual(), c_.tol.resolvent);
        for (int k = 1; k <= 12; ++k)
            add("composition_count", k, std::abs(double(enumerate_compositions(k).size()) - std::pow(2.0, k - 1)), 0.0);
        note("composition count is 2^(k-1); the stated 2^(k-1)-1 is off by one for every k");
        for (int j = 1; j <= 3; ++j) {
            double worst = 0.0, order = kInf;
            for (int i = 0; i < 5; ++i) {
                auto H = random_hermitian(8, rng), A = random_hermitian(8, rng);
                auto a = conjugation_derivative_check(H, A, j, 1e-3, false);
                auto b = conjugation_derivative_check(H, A, j, 2e-2, false);
                auto c = conjugation_derivative_check(H, A, j, 1e-2, false);
                worst = std::max(worst, a.residual / a.commutator_norm);
                order = std::min(order, std::log2(b.residual / c.residual));
            }
            add("conjugation_derivative", j, worst, c_.tol.derivative);
            add("conjugation_derivative_order_deficit", j, std::abs(order - 2.0), 0.25);
        }
        if (model_.sb) {
            const auto& m = *model_.sb;
            auto half = m.params;
            half.M = std::max(8, m.params.M / 2);
            auto coarse = build_spinboson(half);
            for (int l = 1; l <= 3; ++l) {
                auto d = commutator_decomposition_check(m, l);
                double scale = op_norm(Mat(iterated_commutator(m.H.matrix(), m.A, l)[l]));
                add("decomposition_algebraic", l, d.algebraic / scale, 1e-10);
                if (d.algebraic_stated_sign / scale < 1e-6)
                    note("stated Phi sign agrees at l=" + std::to_string(l));
                if (l <= 2) {
                    auto dc = commutator_decomposition_check(coarse, l);
                    add("decomposition_flow", l, d.flow, dc.flow);
                }
            }
            note("Phi term carries (-1)^l; the sign (-1)^(l+1) does not reproduce the commutators");
        }
    }

    // --- hs ---
    void suite_hs() {
        const int dim = static_cast<int>(model_.H.dim());
        const int top = dim <= 128 ? 3 : 2;
        std::vector<int> levels;
        for (int r = 0; r <= top; ++r) levels.push_back(r);
        std::vector<SmoothFunction> fs{make_f_ana(lambda_), make_f_loc(lambda_, c_.I_lo, c_.I_hi)};
        for (const auto& f : fs) {
            auto ext = build_extension(f, 3);
            auto rows = hs_refinement_study(ext, model_.H, levels);
            for (size_t i = 0; i < rows.size(); ++i) {
                double e = rows[i].oracle_error / f.sup_norm;
                hs_.row(f.name, dim, rows[i].level, e);
                if (i == 0) continue;
                double prev = rows[i - 1].oracle_error / f.sup_norm;
                if (prev > 1e-12 && e * 4.0 > prev)
                    fail("hs: " + f.name + " refinement level " + std::to_string(rows[i].level) + " gained less than 4x");
            }
            auto oracle = spectral_function(model_.H, [&](double x) { return f(x); });
            double err = op_norm(Mat(hs_evaluate(ext, model_.H).matrix() - oracle.matrix())) / f.sup_norm;
            hs_.row(f.name, dim, "default", err);
            if (!(err <= c_.tol.hs)) fail("hs: " + f.name + " oracle error " + num(err) + " > " + num(c_.tol.hs));
        }
    }

    // --- mourre ---
    void stage_rows(const MourreCertificate& cert, const std::string& prefix, bool assert_margins) {
        for (const auto& s : cert.stages) {
            mourre_.row(prefix + s.stage, s.constant_name, s.value, s.margin);
            if (assert_margins && !s.stage.ends_with("_info") && s.margin && *s.margin < -1e-9 * std::max(1.0, std::abs(s.value)))
                fail("mourre: stage " + s.stage + " margin " + num(*s.margin));
        }
    }

    void suite_mourre(bool write) {
        StandardMourreInput in;
        RealInterval I(c_.I_lo, c_.I_hi);
        if (model_.sb) {
            auto sm = spinboson_mourre(*model_.sb, I, c_.budget);
            if (write) {
                mourre_.row("spinboson", "threshold_distance", sm.threshold_distance, sm.threshold_distance - c_.mass / 4);
                mourre_.row("spinboson", std::string("status_") + to_string(sm.status), sm.best ? sm.best->C0_tilde : kInf,
                            std::optional<double>());
            }
            if (sm.status != SpinBosonMourre::Status::positive) {
                note("no positive Mourre estimate on I: " + sm.reason);
                return;
            }
            in = sm.input;
        } else {
            int budget = c_.budget >= 0 ? c_.budget : static_cast<int>(spectral_subspace(model_.H, I).cols()) / 2;
            auto b = best_C0(model_.H, model_.A, I, budget);
            if (b.vacuous) {
                note("1_I(H) = 0: vacuous standard estimate");
                return;
            }
            in = {model_.H, model_.A, I, b.C0_tilde, b.K_tilde};
            if (write) {
                mourre_.row("best_C0", "rank_P", double(b.rank_P), std::optional<double>());
                mourre_.row("best_C0", "rank_K", double(b.rank_K), std::optional<double>());
            }
        }
        auto fam = default_regularizer(model_.H, lambda_, I);
        cert_ = localize(in, fam, FKind::loc);
        if (!write) return;
        stage_rows(*cert_, "", true);
        auto ana = localize(in, fam, FKind::ana, {20, false});
        for (const auto& s : ana.stages)
            if (s.stage == "f_ana" || s.stage == "smooth") mourre_.row("f_ana:" + s.stage, s.constant_name, s.value, s.margin);
        if (!form_check(smooth_defect(ana, model_.H, model_.A)).valid()) fail("mourre: f_ana smooth estimate");
        MourreCertificate bad = *cert_;
        bad.C0 *= 10.0;
        double m = form_check(smooth_defect(bad, model_.H, model_.A)).margin;
        mourre_.row("negative_control", "C0_times_10", bad.C0, m);
        if (m >= 0) fail("mourre: negative control C0 x 10 was not detected");
    }

    // --- regularity ---
    void suite_regularity() {
        RegularityOptions o;
        o.k_max = c_.k_max;
        o.bound_k_max = std::min(6, c_.k_max);
        o.growth = false;
        auto rep = regularity_report(model_.H, model_.A, lambda_, psi_, cert_ ? &*cert_ : nullptr, o);
        for (int k = 0; k <= c_.k_max; ++k) {
            std::optional<double> rhs, margin;
            if (k >= 1 && k <= static_cast<int>(rep.bounds.size())) {
                const auto& b = rep.bounds[k - 1];
                rhs = b.rhs;
                margin = b.margin;
                if (b.margin < -c_.tol.bound * b.rhs) fail("regularity: explicit bound violated at k=" + std::to_string(k));
            }
            regularity_.row(k, rep.norms[k], rhs, margin, k == 0 ? std::optional<double>() : rep.q_partial[k]);
        }
        if (!cert_) note("explicit bound skipped: no positive certificate");
    }

    // --- analyticity ---
    void suite_analyticity() {
        auto norms = norm_sequence(model_.A, psi_, std::max(c_.k_max, 6));
        auto an = analytic_radius(model_.A, psi_, norms);
        mourre_.row("analyticity", "q_fit", an.q_fit, std::optional<double>());
        mourre_.row("analyticity", "theta", an.theta, std::optional<double>());
        mourre_.row("analyticity", "tail_bound", an.tail_bound, std::optional<double>());
        mourre_.row("analyticity", "taylor_residual", an.taylor_residual, 2.0 * an.tail_bound - an.taylor_residual);
        if (!an.valid()) fail("analyticity: Taylor residual above tail bound");
        RegularizerFamily fam = cert_ ? cert_->h : default_regularizer(model_.H, lambda_, RealInterval(c_.I_lo, c_.I_hi));
        fam.lambda = lambda_;
        const int kc = std::min(c_.k_max, 5);
        auto c2 = condad2_from_condad(model_.H, model_.A, fam, kc);
        mourre_.row("condad", "v", c2.v, std::optional<double>());
        mourre_.row("condad", "v_scaled", c2.v_scaled, std::optional<double>());
        mourre_.row("condad", "scale", c2.scale, std::optional<double>());
        mourre_.row("condad", "w_measured", c2.w_measured, std::optional<double>());
        std::optional<double> wm;
        if (std::isfinite(c2.v) && std::isfinite(c2.w)) wm = c2.v - 2.0 * c2.w;
        mourre_.row("condad", "w", c2.w, wm);
        if (wm && *wm < 0) fail("analyticity: 2w > v");
        mourre_.row("condad", "route_residual", c2.route_residual, c_.tol.resolvent - c2.route_residual);
        if (c2.route_residual > c_.tol.resolvent) fail("analyticity: resolvent route for ad^k h");
        for (int k = 1; k <= kc; ++k) {
            double m = 1.01 * c2.composition_bound[k] - c2.J_norms[k];
            mourre_.row("condad", "composition_bound_k" + std::to_string(k), c2.J_norms[k], m);
            mourre_.row("condad", "stated_count_bound_k" + std::to_string(k) + "_info", c2.J_norms[k],
                        1.01 * c2.stated_bound[k] - c2.J_norms[k]);
        }
        if (!c2.bound_holds) fail("analyticity: composition bound exceeded");
        if (!c2.stated_bound_holds) note("composition bound with the stated count 2^(k-1)-1 fails");
    }

    // --- spinboson ---
    void suite_spinboson() {
        if (!model_.sb) {
            note("spinboson-bounds skipped: model is " + model_.name);
            return;
        }
        for (auto r : spinboson_bounds(*model_.sb, 8)) {
            double limit = c_.tol.spinboson_slack;
            if (r.quantity == "cauchy_agreement") {
                r.paper_bound = c_.tol.cauchy;
                limit = 1.0;
            }
            double ratio = r.ratio();
            spinboson_.row(r.ell, r.quantity, r.grid_max, r.paper_bound, ratio);
            if (!(ratio <= limit)) fail("spinboson-bounds: " + r.quantity + " l=" + std::to_string(r.ell) + " ratio " + num(ratio));
        }
    }

    void write_meta(const std::filesystem::path& p) const {
        std::ofstream os(p);
        std::time_t t = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        os << "timestamp " << buf << "\n";
        os << "model " << model_.name << "\n";
        os << "dim " << model_.H.dim() << "\n";
        os << "seed " << c_.seed << "\n";
        os << "lambda " << num(lambda_) << "\n";
        os << "suites";
        for (const auto& s : c_.suites) os << " " << s;
        os << "\nexit " << res_.exit_code << "\n";
        for (const auto& s : timings_) os << "time " << s << "\n";
        for (const auto& s : res_.notes) os << "note " << s << "\n";
        for (const auto& s : res_.failures) os << "failure " << s << "\n";
    }

    RunConfig c_;
    std::ostream& log_;
    Model model_;
    double lambda_ = 0.0;
    Vec psi_;
    std::optional<MourreCertificate> cert_;
    RunOutcome res_;
    std::vector<std::string> timings_;
    Csv regularity_{"k,norm_Akpsi,bound_rhs,margin,q_fit_partial"};
    Csv mourre_{"stage,constant_name,value,margin"};
    Csv commutators_{"check,k,residual,tolerance,pass"};
    Csv hs_{"function,dim,refinement,oracle_error"};
    Csv spinboson_{"ell,quantity,grid_max,paper_bound,ratio"};
};

inline RunOutcome run(const RunConfig& c, std::ostream& log = std::cerr) { return Runner(c, log).run(); }

}  // namespace mourre::cli
