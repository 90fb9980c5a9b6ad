// delayfb: damped-cavity homodyne feedback with loop delay.
//
// Subcommands reproduce the library's figure-level outputs as CSV with a
// single '#'-prefixed JSON header carrying the fully resolved run
// configuration, so every file is self-describing and reruns are exact.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <mutex>
#include <thread>
#include <vector>

#include "delayfb/charfn.hpp"
#include "delayfb/chi.hpp"
#include "delayfb/distribution.hpp"
#include "delayfb/model.hpp"
#include "delayfb/moments.hpp"
#include "delayfb/serialization.hpp"
#include "delayfb/trajectories.hpp"
#include "delayfb/verify.hpp"

using namespace delayfb;
using nlohmann::json;

namespace {

int thread_budget() {
    if (const char* env = std::getenv("DELAYFB_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// index-parallel loop; results must go to preallocated slots. The first
// worker exception is rethrown on the calling thread.
template <typename F>
void parallel_for(std::size_t count, F&& body) {
    int n_threads = std::min<int>(thread_budget(), static_cast<int>(count));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

struct CommonOpts {
    double gamma = 1.0;
    double g = 0.45;
    double theta = M_PI_2;
    double phi = 0.0;
    double tau = 0.0;
    double eta = 1.0;
    double alpha0_re = 0.0;
    double alpha0_im = 5.0;
    std::string config_file;
    std::string output = "-";

    void attach(CLI::App* app) {
        app->add_option("--gamma", gamma, "cavity damping rate (>0)");
        app->add_option("--g", g, "feedback gain");
        app->add_option("--theta", theta, "feedback phase (rad)");
        app->add_option("--phi", phi, "homodyne phase (rad)");
        app->add_option("--tau", tau, "feedback delay (>=0)");
        app->add_option("--eta", eta, "detection efficiency (0,1]");
        app->add_option("--alpha0-re", alpha0_re, "Re of the cat amplitude");
        app->add_option("--alpha0-im", alpha0_im, "Im of the cat amplitude");
        app->add_option("--config", config_file,
                        "JSON file with a FeedbackConfig; flags override");
        app->add_option("-o,--output", output, "output CSV path ('-' = stdout)");
    }

    // flags override file values only where the user actually passed them
    FeedbackConfig resolve(const CLI::App* app) {
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw Error(Error::Code::io, "cannot open " + config_file);
            json j = json::parse(in);
            if (app->count("--gamma") == 0 && j.contains("gamma"))
                gamma = j["gamma"].get<double>();
            if (app->count("--g") == 0 && j.contains("g")) g = j["g"].get<double>();
            if (app->count("--theta") == 0 && j.contains("theta"))
                theta = j["theta"].get<double>();
            if (app->count("--phi") == 0 && j.contains("phi"))
                phi = j["phi"].get<double>();
            if (app->count("--tau") == 0 && j.contains("tau"))
                tau = j["tau"].get<double>();
            if (app->count("--eta") == 0 && j.contains("eta"))
                eta = j["eta"].get<double>();
        }
        return FeedbackConfig(gamma, g, theta, phi, tau, eta);
    }

    Complex alpha0() const { return Complex(alpha0_re, alpha0_im); }
};

class Output {
public:
    explicit Output(const std::string& path) {
        if (path != "-") {
            file_.open(path);
            if (!file_) throw Error(Error::Code::io, "cannot write " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

void write_header(std::ostream& os, const json& run_config) {
    os << "# " << run_config.dump() << "\n";
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// ---------------------------------------------------------------- chi ----

int cmd_chi(CommonOpts& opts, const CLI::App* sub, double t_max, int points,
            std::vector<double>& gtau_list) {
    FeedbackConfig base = opts.resolve(sub);
    json run = {{"subcommand", "chi"},
                {"config", to_json(base)},
                {"grid", {{"t_max", t_max}, {"points", points}}},
                {"gamma_tau_list", gtau_list}};

    // one evaluator per curve plus the no-feedback reference
    std::vector<FeedbackConfig> configs;
    std::vector<std::string> labels;
    configs.push_back(FeedbackConfig(base.gamma(), 0.0, base.theta(), base.phi(),
                                     0.0, base.eta()));
    labels.push_back("chi_g0");
    for (double gt : gtau_list) {
        configs.push_back(FeedbackConfig(base.gamma(), base.g(), base.theta(),
                                         base.phi(), gt / base.gamma(), base.eta()));
        std::ostringstream lab;
        lab << "chi_gtau" << gt;
        labels.push_back(lab.str());
    }

    std::vector<std::vector<double>> cols(configs.size(),
                                          std::vector<double>(points));
    parallel_for(configs.size(), [&](std::size_t c) {
        ChiEvaluator chi_e(configs[c]);
        for (int i = 0; i < points; ++i) {
            double t = t_max * i / (points - 1) / base.gamma();
            cols[c][static_cast<std::size_t>(i)] = chi_e.value(t);
        }
    });

    Output out(opts.output);
    write_header(out.stream(), run);
    out.stream() << "gamma_t";
    for (auto& l : labels) out.stream() << "," << l;
    out.stream() << "\n";
    for (int i = 0; i < points; ++i) {
        out.stream() << fmt(t_max * i / (points - 1));
        for (std::size_t c = 0; c < cols.size(); ++c)
            out.stream() << "," << fmt(cols[c][static_cast<std::size_t>(i)]);
        out.stream() << "\n";
    }
    return 0;
}

// -------------------------------------------------------------- pdist ----

int cmd_pdist(CommonOpts& opts, const CLI::App* sub, double t_max, int t_points,
              double x_max, int x_points) {
    FeedbackConfig base = opts.resolve(sub);
    Complex a0 = opts.alpha0();
    json run = {{"subcommand", "pdist"},
                {"config", to_json(base)},
                {"alpha0", {a0.real(), a0.imag()}},
                {"grid",
                 {{"t_max", t_max},
                  {"t_points", t_points},
                  {"x_max", x_max},
                  {"x_points", x_points}}}};

    // the four standard panels
    const double gamma = base.gamma();
    std::vector<FeedbackConfig> panels = {
        FeedbackConfig(gamma, 0.0, base.theta(), base.phi(), 0.0, 1.0),
        FeedbackConfig(gamma, base.g(), base.theta(), base.phi(), 0.0, 1.0),
        FeedbackConfig(gamma, base.g(), base.theta(), base.phi(), 0.01 / gamma, 1.0),
        FeedbackConfig(gamma, base.g(), base.theta(), base.phi(), 0.01 / gamma, 0.9),
    };

    std::vector<std::vector<double>> rows(
        static_cast<std::size_t>(t_points),
        std::vector<double>(static_cast<std::size_t>(x_points) * 4));
    parallel_for(static_cast<std::size_t>(t_points), [&](std::size_t it) {
        double t = t_max * static_cast<double>(it) / (t_points - 1) / gamma;
        for (std::size_t p = 0; p < panels.size(); ++p) {
            CatFringeReport rep = cat_fringe_report(t, a0, panels[p]);
            for (int ix = 0; ix < x_points; ++ix) {
                double x = -x_max + 2.0 * x_max * ix / (x_points - 1);
                rows[it][4 * static_cast<std::size_t>(ix) + p] = cat_pdf(x, rep);
            }
        }
    });

    Output out(opts.output);
    write_header(out.stream(), run);
    out.stream() << "gamma_t,x,p_nofb,p_tau0,p_gtau001,p_gtau001_eta09\n";
    for (int it = 0; it < t_points; ++it) {
        double gt = t_max * it / (t_points - 1);
        for (int ix = 0; ix < x_points; ++ix) {
            double x = -x_max + 2.0 * x_max * ix / (x_points - 1);
            out.stream() << fmt(gt) << "," << fmt(x);
            for (int p = 0; p < 4; ++p)
                out.stream() << ","
                             << fmt(rows[static_cast<std::size_t>(it)]
                                        [4 * static_cast<std::size_t>(ix) +
                                         static_cast<std::size_t>(p)]);
            out.stream() << "\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------- coherence ----

// Stitched cat coherence 2<D(2 alpha0, t)>: exact damped value below tau,
// the closed-form early branch on [tau, 2 tau], the small-delay form beyond.
double coherence_curve_value(double t, Complex a0, const FeedbackConfig& cfg) {
    const double tau = cfg.tau();
    if (t >= 2.0 * tau)
        return 2.0 * coherence_function(t, a0, cfg).real();
    CoherentSuperposition cat = cat_state(a0);
    Complex lam = 2.0 * a0;
    Complex total = 0.0;
    const auto& terms = cat.terms();
    for (std::size_t i = 0; i < terms.size(); ++i)
        for (std::size_t j = 0; j < terms.size(); ++j) {
            CharFnResult r =
                charfn_early(lam, t, terms[i].alpha, terms[j].alpha, cfg);
            total += cat.weight(i, j) * r.value;
        }
    return 2.0 * total.real();
}

int cmd_coherence(CommonOpts& opts, const CLI::App* sub, double t_max,
                  int points, std::vector<double>& gtau_list,
                  std::vector<double>& eta_list) {
    FeedbackConfig base = opts.resolve(sub);
    Complex a0 = opts.alpha0();
    json run = {{"subcommand", "coherence"},
                {"config", to_json(base)},
                {"alpha0", {a0.real(), a0.imag()}},
                {"grid", {{"t_max", t_max}, {"points", points}}},
                {"gamma_tau_list", gtau_list},
                {"eta_list", eta_list}};

    const double gamma = base.gamma();
    std::vector<FeedbackConfig> configs;
    std::vector<std::string> labels;
    configs.push_back(
        FeedbackConfig(gamma, 0.0, base.theta(), base.phi(), 0.0, 1.0));
    labels.push_back("c_g0");
    configs.push_back(
        FeedbackConfig(gamma, base.g(), base.theta(), base.phi(), 0.0, 1.0));
    labels.push_back("c_tau0");
    for (double gt : gtau_list) {
        configs.push_back(FeedbackConfig(gamma, base.g(), base.theta(), base.phi(),
                                         gt / gamma, 1.0));
        std::ostringstream lab;
        lab << "c_gtau" << gt;
        labels.push_back(lab.str());
    }
    for (double eta : eta_list) {
        configs.push_back(FeedbackConfig(gamma, base.g(), base.theta(), base.phi(),
                                         0.01 / gamma, eta));
        std::ostringstream lab;
        lab << "c_eta" << eta;
        labels.push_back(lab.str());
    }

    std::vector<std::vector<double>> cols(configs.size(),
                                          std::vector<double>(points));
    parallel_for(configs.size(), [&](std::size_t c) {
        for (int i = 0; i < points; ++i) {
            double t = t_max * i / (points - 1) / gamma;
            cols[c][static_cast<std::size_t>(i)] =
                coherence_curve_value(t, a0, configs[c]);
        }
    });

    Output out(opts.output);
    write_header(out.stream(), run);
    out.stream() << "gamma_t";
    for (auto& l : labels) out.stream() << "," << l;
    out.stream() << "\n";
    for (int i = 0; i < points; ++i) {
        out.stream() << fmt(t_max * i / (points - 1));
        for (std::size_t c = 0; c < cols.size(); ++c)
            out.stream() << "," << fmt(cols[c][static_cast<std::size_t>(i)]);
        out.stream() << "\n";
    }
    return 0;
}

// ------------------------------------------------------- trajectories ----

int cmd_trajectories(CommonOpts& opts, const CLI::App* sub, int n_seeds,
                     double dt, double t_max, int stride, bool oracle,
                     int n_max) {
    FeedbackConfig cfg = opts.resolve(sub);
    if (cfg.tau() != 0.0)
        throw Error(Error::Code::precondition,
                    "trajectories are the tau = 0 solution; pass --tau 0");
    Complex a0 = opts.alpha0();
    json run = {{"subcommand", "trajectories"},
                {"config", to_json(cfg)},
                {"alpha0", {a0.real(), a0.imag()}},
                {"seeds", n_seeds},
                {"dt", dt},
                {"t_max", t_max},
                {"stride", stride},
                {"oracle", oracle},
                {"n_max", n_max}};

    struct SeedResult {
        std::string rows;
        double fidelity = 1.0;
        double weight_err = 0.0;
        Complex cw_final_full;
        Complex cw_final_asym;
    };
    std::vector<SeedResult> results(static_cast<std::size_t>(n_seeds));

    // the asymptotic closed form is stated for phi = 0, Re{alpha0} = 0 only
    const bool asym_ok = cfg.phi() == 0.0 && a0.real() == 0.0;
    parallel_for(static_cast<std::size_t>(n_seeds), [&](std::size_t s) {
        WienerPath path = generate_path(static_cast<std::uint64_t>(s), dt, t_max);
        auto states = trajectory(path, a0, cfg);
        auto cw_full = coherence_trajectory(path, a0, cfg, CoherenceMode::Full);
        std::vector<Complex> cw_asym(states.size(),
                                     Complex(std::nan(""), std::nan("")));
        if (asym_ok)
            cw_asym = coherence_trajectory(path, a0, cfg, CoherenceMode::Asymptotic);
        std::ostringstream rows;
        for (std::size_t i = 0; i < states.size();
             i += static_cast<std::size_t>(stride)) {
            const auto& st = states[i];
            rows << s << "," << fmt(st.t) << "," << fmt(st.amplitude.real()) << ","
                 << fmt(st.amplitude.imag()) << "," << fmt(st.weight.real()) << ","
                 << fmt(st.weight.imag()) << "," << fmt(path.cumulative[i]) << ","
                 << fmt(cw_full[i].real()) << "," << fmt(cw_full[i].imag()) << ","
                 << fmt(cw_asym[i].real()) << "," << fmt(cw_asym[i].imag()) << "\n";
        }
        SeedResult r;
        r.rows = rows.str();
        r.cw_final_full = cw_full.back();
        r.cw_final_asym = cw_asym.back();
        if (oracle) {
            FockTrajectory ft = fock_sde_oracle(path, a0, cfg, n_max);
            std::size_t end = path.n_steps();
            double nrm = fock_norm(ft.psi[end]);
            Complex ov = coherent_fock_overlap(states[end].amplitude, ft.psi[end]);
            r.fidelity = std::norm(ov) / (nrm * nrm);
            r.weight_err = std::abs(nrm - std::abs(states[end].weight)) /
                           std::abs(states[end].weight);
        }
        results[s] = std::move(r);
    });

    Output out(opts.output);
    write_header(out.stream(), run);
    out.stream() << "seed,t,re_amp,im_amp,re_weight,im_weight,w,"
                    "re_cw_full,im_cw_full,re_cw_asym,im_cw_asym\n";
    for (auto& r : results) out.stream() << r.rows;

    // ensemble summary (stderr keeps the CSV clean when writing to stdout)
    double mean_mag = 0.0;
    double min_fid = 1.0, max_werr = 0.0;
    for (auto& r : results) {
        mean_mag += std::abs(r.cw_final_full);
        min_fid = std::min(min_fid, r.fidelity);
        max_werr = std::max(max_werr, r.weight_err);
    }
    mean_mag /= n_seeds;
    json summary = {{"seeds", n_seeds},
                    {"mean_final_cw_magnitude", mean_mag},
                    {"asymptotic_columns", asym_ok}};
    if (oracle) {
        summary["min_fidelity"] = min_fid;
        summary["max_weight_error"] = max_werr;
        summary["fidelity_ok"] = min_fid >= 1.0 - 1e-3;
    }
    std::cerr << summary.dump() << "\n";
    if (oracle && min_fid < 1.0 - 1e-3)
        throw Error(Error::Code::domain, "oracle fidelity below 1 - 1e-3");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"damped cavity mode under homodyne feedback with loop delay"};
    app.require_subcommand(1);

    CommonOpts chi_opts, pdist_opts, coh_opts, traj_opts;
    chi_opts.g = 0.45;
    pdist_opts.g = 1.0;
    coh_opts.g = 1.0;
    traj_opts.g = 1.0;
    traj_opts.alpha0_re = 1.0;
    traj_opts.alpha0_im = 0.0;

    auto* chi_cmd =
        app.add_subcommand("chi", "mean-quadrature decay curves (figure 1)");
    chi_opts.attach(chi_cmd);
    double chi_tmax = 10.0;
    int chi_points = 501;
    std::vector<double> chi_gtaus = {5.0, 2.5, 1.0, 0.5, 0.0};
    chi_cmd->add_option("--t-max", chi_tmax, "gamma*t upper end");
    chi_cmd->add_option("--points", chi_points, "grid points");
    chi_cmd->add_option("--tau-list", chi_gtaus, "gamma*tau per curve");

    auto* pdist_cmd = app.add_subcommand(
        "pdist", "cat-state marginal distribution panels (figures 2-3)");
    pdist_opts.attach(pdist_cmd);
    double pd_tmax = 0.1, pd_xmax = 4.0;
    int pd_tpoints = 11, pd_xpoints = 401;
    pdist_cmd->add_option("--t-max", pd_tmax, "gamma*t upper end");
    pdist_cmd->add_option("--t-points", pd_tpoints, "time slices");
    pdist_cmd->add_option("--x-max", pd_xmax, "quadrature half-range");
    pdist_cmd->add_option("--x-points", pd_xpoints, "x grid points");

    auto* coh_cmd = app.add_subcommand(
        "coherence", "cat coherence 2<D(2 alpha0,t)> curves (figures 4-5)");
    coh_opts.attach(coh_cmd);
    double coh_tmax = 0.12;
    int coh_points = 241;
    std::vector<double> coh_gtaus = {0.02, 0.01, 0.001};
    std::vector<double> coh_etas = {0.75, 0.9, 0.95, 1.0};
    coh_cmd->add_option("--t-max", coh_tmax, "gamma*t upper end");
    coh_cmd->add_option("--points", coh_points, "grid points");
    coh_cmd->add_option("--tau-list", coh_gtaus, "gamma*tau per curve");
    coh_cmd->add_option("--eta-list", coh_etas, "eta sweep at gamma*tau=0.01");

    auto* traj_cmd = app.add_subcommand(
        "trajectories", "zero-delay stochastic trajectories and coherence");
    traj_opts.attach(traj_cmd);
    int tr_seeds = 10, tr_stride = 100, tr_nmax = 30;
    double tr_dt = 1e-4, tr_tmax = 0.5;
    bool tr_oracle = false;
    traj_cmd->add_option("--seeds", tr_seeds, "number of seeds (0..n-1)");
    traj_cmd->add_option("--dt", tr_dt, "time step");
    traj_cmd->add_option("--t-max", tr_tmax, "final time");
    traj_cmd->add_option("--stride", tr_stride, "output row stride");
    traj_cmd->add_option("--n-max", tr_nmax, "Fock truncation for --oracle");
    traj_cmd->add_flag("--oracle", tr_oracle, "run the Fock SDE cross-check");

    auto* verify_cmd =
        app.add_subcommand("verify", "run the cross-module property suite");
    bool verify_quick = false;
    std::string verify_out = "-";
    verify_cmd->add_flag("--quick", verify_quick, "reduced grids (development)");
    verify_cmd->add_option("-o,--output", verify_out, "report path ('-' = stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (chi_cmd->parsed())
            return cmd_chi(chi_opts, chi_cmd, chi_tmax, chi_points, chi_gtaus);
        if (pdist_cmd->parsed())
            return cmd_pdist(pdist_opts, pdist_cmd, pd_tmax, pd_tpoints, pd_xmax,
                             pd_xpoints);
        if (coh_cmd->parsed())
            return cmd_coherence(coh_opts, coh_cmd, coh_tmax, coh_points, coh_gtaus,
                                 coh_etas);
        if (traj_cmd->parsed())
            return cmd_trajectories(traj_opts, traj_cmd, tr_seeds, tr_dt, tr_tmax,
                                    tr_stride, tr_oracle, tr_nmax);
        if (verify_cmd->parsed()) {
            verify::Options vo;
            vo.quick = verify_quick;
            verify::Report rep = verify::run(vo);
            Output out(verify_out);
            out.stream() << rep.to_json();
            return rep.all_passed ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
