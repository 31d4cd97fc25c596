#include "lres/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "lres/errors.hpp"

namespace lres {

using nlohmann::json;

namespace {

json cjson(Complex z) { return json::array({z.real(), z.imag()}); }

std::string num(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t job_seed(std::uint64_t seed, int i)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

template <class Fn>
void parallel_for(int n, Fn&& fn)
{
    std::vector<std::exception_ptr> errors(n);
    const int workers = std::min(worker_count(), std::max(n, 1));
    auto guarded = [&](int i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) guarded(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (int i = next++; i < n; i = next++) guarded(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

bool hermitian(const Mat& m) { return (m - m.adjoint()).norm() <= 1e-12 * std::max(1.0, m.norm()); }

bool selfadjoint_potential(const PotentialSpec& p)
{
    for (const auto& [nm, block] : p.terms) {
        const Mat a = p.kernel(nm.first, nm.second);
        const Mat b = p.kernel(nm.second, nm.first);
        if ((a - b.adjoint()).norm() > 1e-12 * std::max(1.0, a.norm())) return false;
    }
    return true;
}

Mat reconstruct(const ChannelSpectralData& s)
{
    Mat m = Mat::Zero(s.dim(), s.dim());
    for (int j = 0; j < s.size(); ++j) m += s.eigenvalues[j] * s.projections[j];
    return m;
}

bool selfadjoint_problem(const PreparedThreshold& pt, Complex omega)
{
    return hermitian(reconstruct(pt.local_spectral)) && selfadjoint_potential(pt.local_potential) &&
           std::abs(omega.imag()) <= 1e-15 * std::abs(omega);
}

json entry_json(const ThresholdEntry& e)
{
    json j;
    j["id"] = e.id;
    j["value"] = cjson(e.value);
    j["side"] = e.side == Side::Left ? "left" : "right";
    j["channel"] = e.channel;
    j["degenerate"] = e.degenerate();
    j["partner"] = e.degenerate() ? json(*e.degenerate_partner) : json(nullptr);
    j["case"] = e.kase == Case::A ? "A" : "B";
    return j;
}

json record_json(const ResonanceRecord& r)
{
    json j;
    j["omega"] = cjson(r.omega);
    j["k"] = cjson(r.k);
    j["z"] = cjson(r.z);
    j["mult_index"] = r.mult_index;
    j["mult_residue"] = r.mult_residue;
    j["index_raw"] = cjson(r.index_raw);
    j["contour_radius"] = r.contour_radius;
    j["sheet"] = r.first_sheet ? "first" : "second";
    j["cluster_id"] = r.cluster_id ? json(*r.cluster_id) : json(nullptr);
    j["threshold_id"] = r.threshold_id;
    return j;
}

json effective_json(const EffectiveMatrix& em)
{
    json j;
    j["degenerate"] = em.degenerate;
    j["nu"] = em.nu;
    json ev = json::array();
    for (const auto& c : cluster_eigenvalues(em.matrix)) ev.push_back({{"value", cjson(c.value)}, {"multiplicity", c.multiplicity}});
    j["eigenvalues"] = ev;
    return j;
}

struct Setup {
    PreparedThreshold pt;
    WeightScheme w;
    std::unique_ptr<ResonanceProblem> problem;
    EffectiveMatrix em;
};

Setup make_setup(const RunConfig& c, bool default_to_zero = false, bool flip = false)
{
    Setup s{prepare_threshold(c, default_to_zero), WeightScheme(c.rho, c.box), nullptr, {}};
    ResolventOptions ro;
    ro.eps0 = c.eps0;
    ro.flip_branch = flip;
    s.problem = std::make_unique<ResonanceProblem>(s.pt.local_spectral, s.pt.local_entry, s.pt.local_potential, s.w, ro);
    s.em = build_effective_matrix(s.pt.local_spectral, s.pt.local_entry, s.pt.local_potential, s.w);
    return s;
}

double outer_radius(const RunConfig& c, const Setup& s, Complex omega)
{
    const double eps0 = s.problem->resolvent().eps0();
    const double cap = eps0 * (1.0 - 1e-9);
    if (c.search_scale == "absolute") return std::min(c.search_radius.value_or(cap), cap);
    double cmax = 0.0;
    for (const auto& e : cluster_eigenvalues(s.em.matrix))
        cmax = std::max(cmax, std::abs(e.value) * (s.em.degenerate ? 1.0 : 0.5));
    return std::min(std::max(eps0, c.radius_factor * cmax) * std::abs(omega), cap);
}

std::vector<ResonanceRecord> solve_omega(const RunConfig& c, const Setup& s, Complex omega, double r_in, double r_out,
                                         int job, SearchResult* raw = nullptr)
{
    if (omega == 0.0) return {};
    ResonanceSearch rs;
    rs.r_inner = r_in;
    rs.r_outer = r_out;
    rs.search.tol = c.tol;
    rs.search.seed = job_seed(c.seed, job);
    rs.probe_box = c.probe_box;
    auto recs = s.problem->find(omega, rs, raw);
    for (auto& r : recs) {
        r.z = s.pt.energy(r.z);
        r.threshold_id = s.pt.entry.id;
    }
    return recs;
}

json base_report(const std::string& command, const RunConfig& c, const Setup* s)
{
    json j;
    j["command"] = command;
    j["config"] = c.source;
    if (s) {
        j["threshold"] = entry_json(s->pt.entry);
        j["reflected"] = s->pt.reflected;
        j["eps0"] = s->problem->resolvent().eps0();
        j["box"] = s->w.box();
        j["compressed_rank"] = s->problem->rank();
        j["effective_matrix"] = effective_json(s->em);
    }
    return j;
}

json record_checks(const std::vector<ResonanceRecord>& recs, bool selfadjoint, bool& ok)
{
    json j;
    int mismatched = 0;
    double max_im_z = 0.0;
    double worst_integer = 0.0;
    for (const auto& r : recs) {
        if (r.mult_index != r.mult_residue) ++mismatched;
        worst_integer = std::max(worst_integer, std::abs(r.index_raw - Complex(r.mult_index, 0.0)));
        if (selfadjoint && r.first_sheet) max_im_z = std::max(max_im_z, std::abs(r.z.imag()));
    }
    j["multiplicity_mismatches"] = mismatched;
    j["worst_index_offset"] = worst_integer;
    j["first_sheet_max_abs_im_z"] = max_im_z;
    const bool pass = mismatched == 0 && worst_integer < kIntegerTol && max_im_z < 1e-8;
    j["pass"] = pass;
    ok = ok && pass;
    return j;
}

void add_plot_records(RunOutput& out)
{
    std::ostringstream k, z;
    k << "omega_abs,omega_arg,k_re,k_im,sheet\n";
    z << "omega_abs,omega_arg,z_re,z_im,sheet\n";
    for (const auto& r : out.records) {
        const std::string head = num(std::abs(r.omega)) + "," + num(std::arg(r.omega)) + ",";
        const char* sheet = r.first_sheet ? "first" : "second";
        k << head << num(r.k.real()) << "," << num(r.k.imag()) << "," << sheet << "\n";
        z << head << num(r.z.real()) << "," << num(r.z.imag()) << "," << sheet << "\n";
    }
    out.plot_files["resonances_k_plane.csv"] = k.str();
    out.plot_files["resonances_z_plane.csv"] = z.str();
}

double distance_to_free_spectrum(const ChannelSpectralData& s, Complex z)
{
    double d = INFINITY;
    for (const auto& l : s.eigenvalues) d = std::min(d, distance_to_band(z - l));
    return d;
}

Complex nearest_eigenvalue(const Eigen::SparseMatrix<Complex>& h, Complex z)
{
    Eigen::SparseMatrix<Complex> a = h;
    for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) -= z;
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) return z;
    Vec x(a.rows());
    for (int i = 0; i < x.size(); ++i) x(i) = 1.0 + 0.1 * std::sin(1.0 + i);
    x.normalize();
    Complex lambda = z;
    for (int it = 0; it < 60; ++it) {
        const Vec y = lu.solve(x);
        const Complex mu = x.dot(y);
        const Complex next = z + 1.0 / mu;
        x = y.normalized();
        if (std::abs(next - lambda) < 1e-14 * std::max(1.0, std::abs(next))) return next;
        lambda = next;
    }
    return lambda;
}

}  // namespace

int worker_count()
{
    const char* env = std::getenv("LRES_WORKERS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

PreparedThreshold prepare_threshold(const RunConfig& c, bool default_to_zero)
{
    PreparedThreshold pt;
    pt.spectral = diagonalize_channel(build_channel_matrix(c), c.kase);
    pt.catalog = classify_thresholds(pt.spectral, c.kase);
    if (c.threshold_id) {
        pt.entry = pt.catalog.at(*c.threshold_id);
    } else if (c.threshold_value) {
        pt.entry = pt.catalog.find(*c.threshold_value, c.threshold_side);
    } else if (default_to_zero && c.kase == Case::B) {
        pt.entry = pt.catalog.find(0.0, Side::Left);
    } else {
        throw ConfigError("select a threshold by id or by value");
    }
    pt.potential = build_potential(c, pt.spectral.dim());

    auto left_of = [](const ThresholdCatalog& cat, int channel) {
        for (const auto& e : cat.entries)
            if (e.side == Side::Left && e.channel == channel) return e;
        throw BadParams("channel has no left threshold");
    };

    pt.local_spectral = pt.spectral;
    pt.local_potential = pt.potential;
    pt.local_entry = pt.entry;
    if (pt.entry.side == Side::Right && pt.entry.degenerate()) {
        pt.local_entry = left_of(pt.catalog, *pt.entry.degenerate_partner);
    } else if (pt.entry.side == Side::Right) {
        pt.reflected = true;
        pt.local_spectral = reflect_model(pt.spectral).spectral;
        pt.local_potential = reflect_potential(pt.potential);
        pt.local_entry = left_of(classify_thresholds(pt.local_spectral, c.kase), pt.entry.channel);
    }
    return pt;
}

RunOutput run_spectrum(const RunConfig& c)
{
    RunOutput out;
    const ChannelMatrix m = build_channel_matrix(c);
    const ChannelSpectralData s = diagonalize_channel(m, c.kase);
    const ThresholdCatalog cat = classify_thresholds(s, c.kase);
    json j = base_report("spectrum", c, nullptr);
    json ev = json::array(), bands = json::array(), th = json::array();
    for (int q = 0; q < s.size(); ++q) {
        ev.push_back({{"value", cjson(s.eigenvalues[q])}, {"multiplicity", s.multiplicities[q]}});
        bands.push_back({{"channel", q}, {"from", cjson(s.eigenvalues[q])}, {"to", cjson(s.eigenvalues[q] + 4.0)}});
    }
    for (const auto& e : cat.entries) th.push_back(entry_json(e));
    j["eigenvalues"] = ev;
    j["bands"] = bands;
    j["thresholds"] = th;
    j["condition"] = s.condition;
    const double defect = projection_defect(s);
    j["projection_defect"] = defect;
    bool ok = defect <= 1e-10;
    if (!c.preset.empty()) {
        const auto closed = preset_closed_form(c.preset, c.preset_params);
        double worst = 0.0;
        for (const auto& l : closed) {
            double best = INFINITY;
            for (const auto& e : s.eigenvalues) best = std::min(best, std::abs(e - l));
            worst = std::max(worst, best / std::max(1.0, std::abs(l)));
        }
        j["closed_form_max_rel_error"] = worst;
        ok = ok && worst <= 1e-10;
    }
    j["pass"] = ok;
    out.exit_code = ok ? 0 : 1;
    out.report = j;

    std::ostringstream b;
    b << "channel,lambda_re,lambda_im,multiplicity,band_from_re,band_to_re\n";
    for (int q = 0; q < s.size(); ++q)
        b << q << "," << num(s.eigenvalues[q].real()) << "," << num(s.eigenvalues[q].imag()) << ","
          << s.multiplicities[q] << "," << num(s.eigenvalues[q].real()) << "," << num(s.eigenvalues[q].real() + 4.0)
          << "\n";
    out.plot_files["bands.csv"] = b.str();
    return out;
}

RunOutput run_resonances(const RunConfig& c)
{
    if (c.omegas.empty()) throw ConfigError("resonance runs need at least one omega");
    RunOutput out;
    const Setup s = make_setup(c);
    const int n = static_cast<int>(c.omegas.size());
    std::vector<std::vector<ResonanceRecord>> per(n);
    std::vector<json> searches(n);
    parallel_for(n, [&](int i) {
        const Complex omega = c.omegas[i].value();
        const double r_out = outer_radius(c, s, omega);
        SearchResult raw;
        per[i] = solve_omega(c, s, omega, c.puncture * r_out, r_out, i, &raw);
        searches[i] = {{"omega", cjson(omega)}, {"r_inner", raw.region.r_inner}, {"r_outer", raw.region.r_outer},
                       {"total_index", raw.total_index}, {"cells", raw.cells}, {"retries", raw.retries}};
    });
    json j = base_report("resonances", c, &s);
    bool ok = true;
    json recs = json::array();
    for (int i = 0; i < n; ++i)
        for (const auto& r : per[i]) {
            out.records.push_back(r);
            recs.push_back(record_json(r));
        }
    j["searches"] = searches;
    j["records"] = recs;
    j["checks"] = record_checks(out.records, selfadjoint_problem(s.pt, c.omegas.front().value()) &&
                                                 std::all_of(c.omegas.begin(), c.omegas.end(), [](const OmegaSpec& o) {
                                                     return std::abs(std::sin(o.arg)) < 1e-15;
                                                 }),
                                ok);
    j["pass"] = ok;
    out.report = j;
    out.has_records = true;
    out.exit_code = ok ? 0 : 1;
    add_plot_records(out);
    return out;
}

RunOutput run_clusters(const RunConfig& c)
{
    if (c.omegas.empty()) throw ConfigError("cluster runs need at least one omega");
    RunOutput out;
    const Setup s = make_setup(c);
    const int n = static_cast<int>(c.omegas.size());
    std::vector<std::vector<ResonanceRecord>> per(n);
    std::vector<ClusterPrediction> preds(n);
    std::vector<ClusterReport> reps(n);
    parallel_for(n, [&](int i) {
        const Complex omega = c.omegas[i].value();
        if (omega == 0.0) throw ConfigError("cluster sweeps need nonzero omega");
        preds[i] = predict_clusters(s.em, s.pt.entry.id, omega, c.cluster_C);
        const double r_out = outer_radius(c, s, omega);
        per[i] = solve_omega(c, s, omega, c.puncture * r_out, r_out, i);
        reps[i] = verify_clusters(per[i], preds[i], selfadjoint_problem(s.pt, omega));
    });

    json j = base_report("clusters", c, &s);
    bool ok = true;
    json sweep = json::array();
    std::ostringstream errs;
    errs << "omega_abs,cluster_id,center_re,center_im,error\n";
    for (int i = 0; i < n; ++i) {
        json cl = json::array();
        for (const auto& chk : reps[i].clusters) {
            cl.push_back({{"id", chk.id}, {"center", cjson(chk.center)}, {"radius", chk.radius},
                          {"expected", chk.expected}, {"found", chk.found}, {"max_distance", chk.max_distance},
                          {"contained", chk.contained}});
            errs << num(std::abs(preds[i].omega)) << "," << chk.id << "," << num(chk.center.real()) << ","
                 << num(chk.center.imag()) << "," << num(chk.max_distance) << "\n";
        }
        json recs = json::array();
        for (const auto& r : per[i]) {
            recs.push_back(record_json(r));
            out.records.push_back(r);
        }
        sweep.push_back({{"omega", cjson(preds[i].omega)}, {"clusters", cl}, {"records", recs},
                         {"total_found", reps[i].total_found}, {"total_expected", reps[i].total_expected},
                         {"exact_required", reps[i].exact_required}, {"pass", reps[i].pass}});
        ok = ok && reps[i].pass;
    }
    j["sweep"] = sweep;

    json slopes = json::array();
    const size_t nclusters = preds.empty() ? 0 : preds.front().eigen.size();
    for (size_t cid = 0; cid < nclusters; ++cid) {
        std::vector<double> xs, ys;
        for (int i = 0; i < n; ++i) {
            if (reps[i].clusters.size() != nclusters) continue;
            const auto& chk = reps[i].clusters[cid];
            if (chk.found > 0 && chk.max_distance > 0.0) {
                xs.push_back(std::abs(preds[i].omega));
                ys.push_back(chk.max_distance);
            }
        }
        const int m = preds.front().eigen[cid].multiplicity;
        const double expected = 1.0 + 1.0 / m;
        json row = {{"cluster", cid}, {"multiplicity", m}, {"expected_order", expected}, {"points", xs.size()}};
        if (xs.size() >= 3) {
            const double slope = loglog_slope(xs, ys);
            row["slope"] = slope;
            const bool pass = slope >= expected - 0.2;
            row["pass"] = pass;
            ok = ok && pass;
        }
        slopes.push_back(row);
    }
    j["order_regression"] = slopes;
    j["checks"] = record_checks(out.records, false, ok);
    j["pass"] = ok;
    out.report = j;
    out.has_records = true;
    out.exit_code = ok ? 0 : 1;
    add_plot_records(out);
    out.plot_files["cluster_errors.csv"] = errs.str();
    return out;
}

RunOutput run_accumulate(const RunConfig& c)
{
    if (c.kase != Case::B) throw NotCaseB("accumulation runs need case B");
    if (c.omegas.empty()) throw ConfigError("accumulation runs need at least one omega");
    RunOutput out;
    const Setup s = make_setup(c, true);
    if (s.pt.local_entry.channel != s.pt.local_spectral.zero_channel)
        throw NotCaseB("accumulation is studied at the thresholds 0 and 4 of case B");
    const int sign = s.pt.local_potential.sign;
    const QE0 qe = build_Q0_E0(s.pt.local_spectral, s.pt.local_potential, s.w);
    const auto eps = epsilon_sequence(qe.counting, c.eps_floor);
    const double eps0 = s.problem->resolvent().eps0();

    json j = base_report("accumulate", c, &s);
    bool ok = true;
    // Nonzero spectrum of Q0 is half that of sign * E0.
    const RealVec eq = qe.counting_Q0.eigenvalues();
    const RealVec ee = qe.counting.eigenvalues();
    double pairing = 0.0;
    const int r = std::min(qe.rank_Q0, qe.rank_E0);
    for (int i = 0; i < r; ++i)
        pairing = std::max(pairing, std::abs(eq(eq.size() - 1 - i) - 0.5 * ee(ee.size() - 1 - i)));
    j["rank_Q0"] = qe.rank_Q0;
    j["rank_E0"] = qe.rank_E0;
    j["half_spectrum_defect"] = pairing;
    ok = ok && qe.rank_Q0 == qe.rank_E0 && pairing <= 1e-10 * std::max(1.0, qe.counting.max());
    j["E0_eigenvalues"] = std::vector<double>(ee.data(), ee.data() + ee.size());
    j["eps_sequence"] = eps;

    const int n = static_cast<int>(c.omegas.size());
    std::vector<std::vector<ResonanceRecord>> per(n);
    parallel_for(n, [&](int i) {
        const Complex omega = c.omegas[i].value();
        const double r_out = std::min(eps0 * std::abs(omega), eps0 * (1.0 - 1e-9));
        const double r_in = eps.empty() ? c.puncture * r_out : 0.5 * eps.back() * std::abs(omega);
        per[i] = solve_omega(c, s, omega, r_in, r_out, i);
    });

    json runs = json::array();
    std::ostringstream counts;
    counts << "omega_abs,omega_arg,eps,found,expected\n";
    for (int i = 0; i < n; ++i) {
        const Complex omega = c.omegas[i].value();
        const auto sector = verify_sector(per[i], omega, sign, c.sector_theta);
        const auto counting = verify_counting(per[i], qe.counting, eps, omega, eps0);
        int mismatched_sheets = 0;
        double axis_dev = 0.0;
        const double axis = accumulation_axis(omega);
        json recs = json::array();
        for (const auto& rec : per[i]) {
            const auto tag = classify_sheet(rec, omega, sign);
            if (!tag.matches) ++mismatched_sheets;
            const Complex zl = rec.k * rec.k;
            axis_dev = std::max(axis_dev, std::abs(std::remainder(std::arg(zl) - axis, 2.0 * kPi)));
            json rj = record_json(rec);
            rj["expected_sheet"] = tag.expected == SheetExpectation::First    ? "first"
                                   : tag.expected == SheetExpectation::Second ? "second"
                                                                               : "undetermined";
            recs.push_back(rj);
            out.records.push_back(rec);
        }
        json rows = json::array();
        for (const auto& row : counting.rows) {
            rows.push_back({{"eps", row.eps}, {"found", row.found}, {"expected", row.expected}, {"deviation", row.deviation}});
            counts << num(std::abs(omega)) << "," << num(std::arg(omega)) << "," << num(row.eps) << "," << row.found
                   << "," << row.expected << "\n";
        }
        const bool axis_ok = axis_dev <= 0.1;
        const bool pass = sector.pass && counting.pass && mismatched_sheets == 0 && axis_ok;
        runs.push_back({{"omega", cjson(omega)},
                        {"sector", {{"max_signed_im_k_over_omega", sector.max_signed_im},
                                    {"max_relative_re", sector.max_relative_re}, {"theta", sector.theta},
                                    {"pass", sector.pass}}},
                        {"counting", {{"rows", rows}, {"monotone", counting.monotone}, {"saturation", counting.saturation},
                                      {"pass", counting.pass}}},
                        {"sheet_mismatches", mismatched_sheets},
                        {"axis", axis},
                        {"axis_max_deviation", axis_dev},
                        {"records", recs},
                        {"pass", pass}});
        ok = ok && pass;
    }
    j["runs"] = runs;
    j["checks"] = record_checks(out.records, false, ok);
    j["pass"] = ok;
    out.report = j;
    out.has_records = true;
    out.exit_code = ok ? 0 : 1;
    add_plot_records(out);
    out.plot_files["annulus_counts.csv"] = counts.str();
    return out;
}

RunOutput run_crosscheck(const RunConfig& c)
{
    RunOutput out;
    const Setup s = make_setup(c, true, c.debug_flip_branch);
    json j = base_report("crosscheck", c, &s);
    bool ok = true;
    const auto& res = s.problem->resolvent();
    const double eps0 = res.eps0();

    // (a) continuation against a large Dirichlet box.
    json cont = json::array();
    const int P = std::max(2, c.probe_box);
    std::vector<int> sites;
    for (int n = -P; n <= P; ++n) sites.push_back(n);
    bool cont_ok = true;
    for (const Complex k : {0.5 * eps0 * std::exp(kI * (kPi / 3.0)), 0.2 * eps0 * std::exp(kI * (kPi / 5.0))}) {
        const Complex z = res.z_of_k(k);
        double gamma = INFINITY;
        bool usable = true;
        for (const auto& l : s.pt.local_spectral.eigenvalues) {
            if (distance_to_band(z - l) < 1e-6) usable = false;
            else gamma = std::min(gamma, std::abs(theta(z - l).imag()));
        }
        if (!usable) {
            cont.push_back({{"k", cjson(k)}, {"skipped", true}});
            continue;
        }
        const int L_big = std::min(P + static_cast<int>(std::ceil(40.0 / gamma)) + 5, 200000 / std::max(1, res.dim()));
        const Mat lib = res.block(k, sites, sites);
        const Mat ref = box_sandwiched_resolvent(s.pt.local_spectral, s.w, z, P, L_big);
        const double rel = (lib - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff();
        const bool pass = rel <= 1e-8;
        cont_ok = cont_ok && pass;
        cont.push_back({{"k", cjson(k)}, {"box", L_big}, {"relative_error", rel}, {"pass", pass}});
    }
    j["continuation"] = cont;
    ok = ok && cont_ok;

    // (b) first-sheet records against the truncated operator, (c) multiplicity equivalence.
    const int n = static_cast<int>(c.omegas.size());
    std::vector<std::vector<ResonanceRecord>> per(n);
    std::vector<json> eig(n);
    std::vector<char> eig_ok(n, 1);
    parallel_for(n, [&](int i) {
        const Complex omega = c.omegas[i].value();
        const double r_out = outer_radius(c, s, omega);
        per[i] = solve_omega(c, s, omega, c.puncture * r_out, r_out, i);
        const auto h = box_hamiltonian(s.pt.local_spectral, s.pt.local_potential, omega, c.crosscheck_box);
        json rows = json::array();
        for (const auto& r : per[i]) {
            const Complex zl = res.z_of_k(r.k);
            const Complex lambda = nearest_eigenvalue(h, zl);
            const double dist = std::abs(lambda - zl);
            const bool genuine = distance_to_free_spectrum(s.pt.local_spectral, lambda) > 1e-3;
            bool pass = true;
            if (r.first_sheet) pass = dist <= c.crosscheck_tol;
            else pass = !(genuine && dist <= c.crosscheck_tol);
            if (!pass) eig_ok[i] = 0;
            rows.push_back({{"k", cjson(r.k)}, {"sheet", r.first_sheet ? "first" : "second"},
                            {"nearest_box_eigenvalue", cjson(s.pt.energy(lambda))}, {"distance", dist}, {"pass", pass}});
        }
        eig[i] = {{"omega", cjson(omega)}, {"records", rows}, {"pass", static_cast<bool>(eig_ok[i])}};
    });
    for (int i = 0; i < n; ++i) {
        ok = ok && eig_ok[i];
        for (const auto& r : per[i]) out.records.push_back(r);
    }
    j["eigenvalues"] = eig;
    j["multiplicity"] = record_checks(out.records, false, ok);

    // (d) right thresholds: direct continuation with the reflected branch against the reflected problem.
    if (s.pt.reflected && !c.debug_flip_branch) {
        ResolventOptions ro;
        ro.eps0 = c.eps0;
        const ResonanceProblem direct(s.pt.spectral, s.pt.entry, s.pt.potential, s.w, ro);
        json rows = json::array();
        bool pass = true;
        for (int i = 0; i < n; ++i) {
            const Complex omega = c.omegas[i].value();
            const double r_out = outer_radius(c, s, omega);
            ResonanceSearch rs;
            rs.r_inner = c.puncture * r_out;
            rs.r_outer = r_out;
            rs.search.seed = job_seed(c.seed, i);
            rs.search.tol = c.tol;
            rs.residue = false;
            const auto d = direct.find(omega, rs);
            std::vector<Complex> mapped;
            for (const auto& r : d) mapped.push_back(kI * r.k);
            bool same = mapped.size() == per[i].size();
            double worst = 0.0;
            for (const auto& r : per[i]) {
                double best = INFINITY;
                for (const auto& m : mapped) best = std::min(best, std::abs(m - r.k));
                worst = std::max(worst, best / std::max(std::abs(r.k), 1e-300));
            }
            same = same && worst <= 1e-7;
            pass = pass && same;
            rows.push_back({{"omega", cjson(omega)}, {"direct", mapped.size()}, {"reflected", per[i].size()},
                            {"max_relative_distance", worst}, {"pass", same}});
        }
        j["reflection"] = rows;
        ok = ok && pass;
    }

    j["pass"] = ok;
    out.report = j;
    out.has_records = true;
    out.exit_code = ok ? 0 : 1;
    add_plot_records(out);
    return out;
}

RunOutput run_command(const std::string& command, const RunConfig& c)
{
    if (command == "spectrum") return run_spectrum(c);
    if (command == "resonances") return run_resonances(c);
    if (command == "clusters") return run_clusters(c);
    if (command == "accumulate") return run_accumulate(c);
    if (command == "crosscheck") return run_crosscheck(c);
    throw ConfigError("unknown command '" + command + "'");
}

std::string records_csv(const std::vector<ResonanceRecord>& records)
{
    std::ostringstream s;
    s << "omega_re,omega_im,k_re,k_im,z_re,z_im,mult,sheet,cluster_id,threshold_id\n";
    for (const auto& r : records) {
        s << num(r.omega.real()) << "," << num(r.omega.imag()) << "," << num(r.k.real()) << "," << num(r.k.imag())
          << "," << num(r.z.real()) << "," << num(r.z.imag()) << "," << r.mult_index << ","
          << (r.first_sheet ? "first" : "second") << "," << (r.cluster_id ? std::to_string(*r.cluster_id) : "")
          << "," << r.threshold_id << "\n";
    }
    return s.str();
}

void write_outputs(const RunOutput& out, const RunConfig& c, bool emit_plot_data)
{
    namespace fs = std::filesystem;
    auto write = [](const fs::path& p, const std::string& text) {
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + p.string());
        f << text;
    };
    if (out.has_records && !c.csv_path.empty()) write(c.csv_path, records_csv(out.records));
    if (!c.report_path.empty()) write(c.report_path, out.report.dump(2) + "\n");
    if (emit_plot_data) {
        const fs::path dir = c.plot_dir.empty() ? fs::path("plots") : fs::path(c.plot_dir);
        for (const auto& [name, text] : out.plot_files) write(dir / name, text);
    }
}

Eigen::SparseMatrix<Complex> box_hamiltonian(const ChannelSpectralData& s, const PotentialSpec& p, Complex omega, int L)
{
    const int dim = s.dim();
    const int n = (2 * L + 1) * dim;
    const Mat m = reconstruct(s);
    std::vector<Eigen::Triplet<Complex>> t;
    auto idx = [&](int site, int a) { return (site + L) * dim + a; };
    for (int site = -L; site <= L; ++site) {
        for (int a = 0; a < dim; ++a) {
            t.emplace_back(idx(site, a), idx(site, a), 2.0);
            if (site > -L) t.emplace_back(idx(site, a), idx(site - 1, a), -1.0);
            if (site < L) t.emplace_back(idx(site, a), idx(site + 1, a), -1.0);
            for (int b = 0; b < dim; ++b)
                if (m(a, b) != 0.0) t.emplace_back(idx(site, a), idx(site, b), m(a, b));
        }
    }
    if (omega != 0.0)
        for (const auto& [nm, block] : p.terms) {
            if (std::abs(nm.first) > L || std::abs(nm.second) > L) continue;
            const Mat v = p.kernel(nm.first, nm.second);
            for (int a = 0; a < dim; ++a)
                for (int b = 0; b < dim; ++b)
                    if (v(a, b) != 0.0) t.emplace_back(idx(nm.first, a), idx(nm.second, b), omega * v(a, b));
        }
    Eigen::SparseMatrix<Complex> h(n, n);
    h.setFromTriplets(t.begin(), t.end());
    return h;
}

Mat box_sandwiched_resolvent(const ChannelSpectralData& s, const WeightScheme& w, Complex z, int P, int L_big)
{
    const int dim = s.dim();
    PotentialSpec none;
    none.dim = dim;
    Eigen::SparseMatrix<Complex> a = box_hamiltonian(s, none, 0.0, L_big);
    for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) -= z;
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw AtPole("box operator is singular at z");
    const int cols = (2 * P + 1) * dim;
    Mat rhs = Mat::Zero(a.rows(), cols);
    for (int c = 0; c < cols; ++c) rhs((L_big - P) * dim + c, c) = 1.0;
    const Mat x = lu.solve(rhs);
    Mat out = x.middleRows((L_big - P) * dim, cols);
    for (int r = 0; r < cols; ++r)
        for (int c = 0; c < cols; ++c) out(r, c) *= w.minus(r / dim - P) * w.minus(c / dim - P);
    return out;
}

}  // namespace lres
