#include "fockmetro/cli/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "fockmetro/channels.hpp"
#include "fockmetro/cli/csv.hpp"
#include "fockmetro/errors.hpp"
#include "fockmetro/linalg.hpp"
#include "fockmetro/metrology.hpp"
#include "fockmetro/sensitivity.hpp"
#include "fockmetro/states.hpp"

namespace fockmetro::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint32_t kStateFormat = 1;
constexpr const char* kPointSalt = "point-v1";
constexpr const char* kStateSalt = "state-v1";

std::string hexf(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

DimLadder ladder_for(double nbar_expected, const Truncation& t) {
  DimLadder l = DimLadder::for_occupation(nbar_expected);
  if (t.start_dim > 0) l.start = t.start_dim;
  l.max_dim = t.max_dim;
  l.start = std::min(l.start, l.max_dim);
  l.tail_tol = t.tail_tol;
  l.tail_window = t.tail_window;
  return l;
}

PreparedState from_pure(PureState s, double parameter) {
  PreparedState p;
  p.dim_lo = s.dim();
  p.parameter = parameter;
  p.occupation = occupation(s);
  p.tail_lo = s.tail();
  p.pure = std::move(s);
  return p;
}

PreparedState build_multisqueezed_kappa(const FamilySpec& f, double kappa, const Truncation& t) {
  const DimLadder ladder = ladder_for(1.0, t);
  int np = t.pump_dim > 0 ? t.pump_dim : pump_dim_default(f.alpha);
  std::optional<UnconvergedTruncation> last;
  for (int d : ladder.dims(f.m)) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      MultisqueezedGenerator gen(f.m, f.alpha, multisqueezed_lo_policy(f.m, d, t.tail_tol),
                                 multisqueezed_pump_policy(f.alpha, np, t.tail_tol));
      TwoModeState two = gen.two_mode(kappa);
      if (two.tail_p() > two.policy_p().tail_tol) {
        last = UnconvergedTruncation("pump", np, two.tail_p(), t.tail_tol);
        np = static_cast<int>(std::ceil(1.5 * np));
        continue;
      }
      if (two.tail_lo() > two.policy_lo().tail_tol) {
        last = UnconvergedTruncation("lo", d, two.tail_lo(), t.tail_tol);
        break;
      }
      PreparedState p;
      p.dim_lo = d;
      p.dim_p = np;
      p.parameter = kappa;
      const RVec mp = two.marginal_p();
      for (Eigen::Index j = 0; j < mp.size(); ++j) p.pump_occupation += static_cast<double>(j) * mp(j);
      p.tail_lo = two.tail_lo();
      p.tail_p = two.tail_p();
      p.mixed = partial_trace_pump(two);
      p.occupation = occupation(*p.mixed);
      return p;
    }
    if (d >= f.m * np) break;
  }
  if (last) throw *last;
  fail(ErrorKind::InvalidDimension, "empty dimension ladder");
}

PreparedState build_state(const FamilySpec& f, std::optional<double> nbar, const Truncation& t) {
  switch (f.kind) {
    case FamilyKind::Coherent: {
      const double a = nbar ? std::sqrt(*nbar) : *f.parameter;
      return from_pure(build_on_ladder(ladder_for(a * a, t),
                                       [a](const TruncationPolicy& p) { return coherent_state(a, p); }),
                       a);
    }
    case FamilyKind::Squeezed: {
      const double r = nbar ? squeezing_for_occupation(*nbar) : *f.parameter;
      const double expected = std::sinh(r) * std::sinh(r);
      return from_pure(build_on_ladder(ladder_for(expected, t),
                                       [r](const TruncationPolicy& p) { return squeezed_vacuum(r, p); }),
                       r);
    }
    case FamilyKind::Fock: {
      const int n = static_cast<int>(nbar ? *nbar : *f.parameter);
      const int dim = std::max(t.start_dim > 0 ? t.start_dim : 32, n + 2 + t.tail_window);
      if (dim > t.max_dim) throw UnconvergedTruncation("single", t.max_dim, 1.0, t.tail_tol);
      CVec v = CVec::Zero(dim);
      v(n) = 1.0;
      TruncationPolicy p;
      p.dim = dim;
      p.tail_tol = t.tail_tol;
      p.tail_window = t.tail_window;
      return from_pure(PureState(std::move(v), p), n);
    }
    case FamilyKind::MthPhase: {
      const double g = nbar ? gamma_for_occupation(f.m, *nbar) : *f.parameter;
      const MthPhaseSpec spec{f.m, g};
      const double expected = mth_phase_occupation_closed(f.m, g);
      return from_pure(build_on_ladder(ladder_for(expected, t),
                                       [spec](const TruncationPolicy& p) { return mth_phase_state(spec, p); }),
                       g);
    }
    case FamilyKind::Multisqueezed: {
      if (!nbar) return build_multisqueezed_kappa(f, *f.parameter, t);
      MultisqueezedPoint pt = multisqueezed_for_occupation(f.m, f.alpha, *nbar, ladder_for(*nbar, t), t.pump_dim);
      PreparedState p;
      p.dim_lo = pt.dim_lo;
      p.dim_p = pt.dim_p;
      p.parameter = pt.kappa;
      p.occupation = pt.occupation;
      p.pump_occupation = pt.pump_occupation;
      p.tail_lo = pt.tail_lo;
      p.tail_p = pt.tail_p;
      p.mixed = std::move(pt.state);
      return p;
    }
  }
  fail(ErrorKind::ConfigError, "unknown family");
}

void put_policy(ByteWriter& w, const TruncationPolicy& p) {
  w.put_i64(p.dim);
  w.put_f64(p.tail_tol);
  w.put_i64(p.tail_window);
  w.put_i64(p.align_multiple.value_or(0));
}

TruncationPolicy get_policy(ByteReader& r) {
  TruncationPolicy p;
  p.dim = static_cast<int>(r.i64());
  p.tail_tol = r.f64();
  p.tail_window = static_cast<int>(r.i64());
  const auto a = r.i64();
  if (a > 0) p.align_multiple = static_cast<int>(a);
  return p;
}

void put_matrix(ByteWriter& w, const CMat& m) {
  w.put_i64(m.rows());
  w.put_i64(m.cols());
  w.raw(m.data(), sizeof(cplx) * static_cast<std::size_t>(m.size()));
}

CMat get_matrix(ByteReader& r) {
  const auto rows = r.i64(), cols = r.i64();
  if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 34)) throw std::runtime_error("bad matrix shape");
  CMat m(rows, cols);
  r.raw(m.data(), sizeof(cplx) * static_cast<std::size_t>(m.size()));
  return m;
}

// ---------------------------------------------------------------- worker pool

struct PointOutput {
  std::vector<std::string> cells;
  bool ok = true;
  std::string error;
};

std::string serialize_point(const PointOutput& p) {
  ByteWriter w;
  w.put_u32(p.ok ? 1 : 0);
  w.put_str(p.error);
  w.put_i64(static_cast<std::int64_t>(p.cells.size()));
  for (const auto& c : p.cells) w.put_str(c);
  return w.str();
}

std::optional<PointOutput> deserialize_point(const std::string& s) {
  try {
    ByteReader r(s);
    PointOutput p;
    p.ok = r.u32() == 1;
    p.error = r.str();
    const auto n = r.i64();
    for (std::int64_t i = 0; i < n; ++i) p.cells.push_back(r.str());
    if (!r.done()) return std::nullopt;
    return p;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

class Context {
 public:
  Context(const SweepConfig& c, const RunOptions& o)
      : config(c), out_dir(o.out_dir.value_or(c.output)), workers(o.workers.value_or(c.workers)),
        log(o.log ? *o.log : std::cerr) {
    if (c.cache) cache = Cache(o.cache_dir ? fs::path(*o.cache_dir) : Cache::default_dir());
  }

  const SweepConfig& config;
  std::string out_dir;
  int workers;
  std::ostream& log;
  Cache cache;

  std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }

  PreparedState state(const FamilySpec& f, std::optional<double> nbar) const {
    return prepare_state(f, nbar, config.truncation, cache);
  }

  // runs fn over [0, n) on the worker pool; point results go through the cache under key(i)
  std::vector<PointOutput> map(std::size_t n, const std::function<std::string(std::size_t)>& key,
                               const std::function<PointOutput(std::size_t)>& fn) const {
    std::vector<PointOutput> out(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        const std::string k = Cache::key_for(std::string(kPointSalt) + "|" + key(i));
        if (auto hit = cache.get(k)) {
          if (auto p = deserialize_point(*hit)) {
            out[i] = std::move(*p);
            continue;
          }
        }
        out[i] = fn(i);
        // unconverged points are recomputed on the next run
        if (out[i].ok) cache.put(k, serialize_point(out[i]));
      }
    };
    const int nt = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (nt == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    return out;
  }

  std::string base_key() const {
    return std::string(task_name(config.task)) + "|" + family_key(config.family) + "|" +
           truncation_key(config.truncation);
  }
};

std::string m_cell(const FamilySpec& f) { return f.m > 0 ? std::to_string(f.m) : ""; }
std::string alpha_cell(const FamilySpec& f) {
  return f.kind == FamilyKind::Multisqueezed ? format_number(f.alpha) : "";
}
std::string dim_p_cell(const PreparedState& s) { return s.dim_p > 0 ? std::to_string(s.dim_p) : ""; }

int report(const Context& ctx, const std::vector<PointOutput>& pts, const std::vector<std::string>& labels) {
  int failed = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!pts[i].ok) {
      ++failed;
      ctx.log << "point " << labels[i] << ": " << pts[i].error << "\n";
    } else if (!pts[i].error.empty()) {
      ctx.log << "point " << labels[i] << ": " << pts[i].error << "\n";
    }
  if (failed) ctx.log << failed << " of " << pts.size() << " points failed\n";
  return failed ? kExitPartial : kExitOk;
}

std::vector<std::string> grid_labels(const std::vector<double>& g, const char* name) {
  std::vector<std::string> out;
  for (double v : g) out.push_back(std::string(name) + "=" + format_number(v));
  return out;
}

double state_qfi(const PreparedState& s) {
  if (s.pure) return qfi_pure(*s.pure).qfi;
  if (!s.mixed->converged())
    throw UnconvergedTruncation("lo", s.mixed->dim(), s.mixed->tail(), s.mixed->policy().tail_tol);
  return qfi_mixed(*s.mixed).qfi;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) fail(ErrorKind::NumericalIntegrity, std::string("non-finite ") + what);
}

// ---------------------------------------------------------------- tasks

struct QfiPoint {
  double nbar, qfi;
  PreparedState state;
};

QfiPoint qfi_point(const Context& ctx, const FamilySpec& f, double nbar) {
  QfiPoint p{0.0, 0.0, ctx.state(f, nbar)};
  p.nbar = p.state.occupation;
  p.qfi = state_qfi(p.state);
  require_finite(p.qfi, "qfi");
  return p;
}

int task_qfi(const Context& ctx) {
  const auto& c = ctx.config;
  CsvTable t({"nbar", "qfi", "qfi_squeezed_ref", "family", "m", "alpha", "dim_lo", "dim_p", "converged"});
  auto pts = ctx.map(
      c.grid.size(), [&](std::size_t i) { return ctx.base_key() + "|nbar=" + hexf(c.grid[i]); },
      [&](std::size_t i) {
        PointOutput o;
        try {
          QfiPoint q = qfi_point(ctx, c.family, c.grid[i]);
          o.cells = {format_number(q.nbar), format_number(q.qfi), format_number(qfi_squeezed_closed(q.nbar)),
                     family_name(c.family.kind), m_cell(c.family), alpha_cell(c.family),
                     std::to_string(q.state.dim_lo), dim_p_cell(q.state), "true"};
        } catch (const std::exception& e) {
          o.ok = false;
          o.error = e.what();
          o.cells = {format_number(c.grid[i]), "", "", family_name(c.family.kind), m_cell(c.family),
                     alpha_cell(c.family), "", "", "false"};
        }
        return o;
      });
  for (auto& p : pts) t.add_row(p.cells);
  t.write(ctx.path("qfi_sweep.csv"));
  return report(ctx, pts, grid_labels(c.grid, "nbar"));
}

// qfi points along a grid; shared by beta_sweep and fit_beta
struct CurvePoint {
  bool ok = false;
  double nbar = 0.0, qfi = 0.0;
  int dim_lo = 0, dim_p = 0;
};

PointOutput curve_output(const CurvePoint& p, const std::string& error) {
  PointOutput o;
  o.ok = p.ok;
  o.error = error;
  o.cells = {format_number(p.nbar), format_number(p.qfi), std::to_string(p.dim_lo), std::to_string(p.dim_p)};
  return o;
}

CurvePoint curve_input(const PointOutput& o, double target) {
  CurvePoint p;
  p.ok = o.ok;
  p.nbar = target;
  if (!o.ok || o.cells.size() != 4) return p;
  p.nbar = std::stod(o.cells[0]);
  p.qfi = std::stod(o.cells[1]);
  p.dim_lo = std::stoi(o.cells[2]);
  p.dim_p = std::stoi(o.cells[3]);
  return p;
}

std::vector<double> betas_for(const std::vector<CurvePoint>& pts) {
  std::vector<double> nb, f;
  for (const auto& p : pts)
    if (p.ok) {
      nb.push_back(p.nbar);
      f.push_back(p.qfi);
    }
  std::vector<double> out(pts.size(), std::numeric_limits<double>::quiet_NaN());
  if (nb.size() < 3) return out;
  const ScalingCurve curve = beta_numeric(ScalingCurve::from_samples(nb, f));
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].ok) out[i] = curve.beta[k++];
  return out;
}

std::vector<CurvePoint> compute_curve(const Context& ctx, const FamilySpec& f, const std::vector<double>& grid,
                                      std::vector<std::string>& errors) {
  const std::string base =
      std::string("curve|") + family_key(f) + "|" + truncation_key(ctx.config.truncation);
  auto outs = ctx.map(
      grid.size(), [&](std::size_t i) { return base + "|nbar=" + hexf(grid[i]); },
      [&](std::size_t i) {
        CurvePoint p;
        p.nbar = grid[i];
        try {
          QfiPoint q = qfi_point(ctx, f, grid[i]);
          p = {true, q.nbar, q.qfi, q.state.dim_lo, q.state.dim_p};
          return curve_output(p, "");
        } catch (const std::exception& e) {
          return curve_output(p, e.what());
        }
      });
  std::vector<CurvePoint> pts;
  errors.clear();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    pts.push_back(curve_input(outs[i], grid[i]));
    errors.push_back(outs[i].error);
  }
  return pts;
}

int task_beta(const Context& ctx) {
  const auto& c = ctx.config;
  std::vector<std::string> errors;
  const auto pts = compute_curve(ctx, c.family, c.grid, errors);
  const auto beta = betas_for(pts);
  CsvTable t({"nbar", "qfi", "beta", "family", "m", "alpha", "dim_lo", "dim_p", "converged"});
  std::vector<PointOutput> status;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    t.add_row({format_number(p.nbar), p.ok ? format_number(p.qfi) : "", format_number(beta[i]),
               family_name(c.family.kind), m_cell(c.family), alpha_cell(c.family),
               p.ok ? std::to_string(p.dim_lo) : "", p.ok && p.dim_p > 0 ? std::to_string(p.dim_p) : "",
               format_bool(p.ok)});
    status.push_back({{}, p.ok, errors[i]});
  }
  t.write(ctx.path("beta_sweep.csv"));
  int rc = report(ctx, status, grid_labels(c.grid, "nbar"));
  if (rc == kExitOk && std::count_if(pts.begin(), pts.end(), [](const CurvePoint& p) { return p.ok; }) < 3)
    rc = kExitPartial;
  return rc;
}

int task_sensitivity(const Context& ctx) {
  const auto& c = ctx.config;
  CsvTable t({"nbar", "sensitivity", "qfi_same", "ratio_R", "ratio_R1", "pool_order", "family", "m", "alpha",
              "theta", "converged", "dim_lo", "dim_p"});
  auto pts = ctx.map(
      c.grid.size(),
      [&](std::size_t i) { return ctx.base_key() + "|k=" + std::to_string(c.pool_order) + "|nbar=" + hexf(c.grid[i]); },
      [&](std::size_t i) {
        PointOutput o;
        try {
          const PreparedState s = ctx.state(c.family, c.grid[i]);
          const ObservablePool pool = build_pool_for_state(c.pool_order, s.dim());
          const auto res = s.pure ? optimal_sensitivity(pool, *s.pure).second
                                  : optimal_sensitivity(pool, *s.mixed).second;
          require_finite(res.sensitivity, "sensitivity");
          o.cells = {format_number(res.occupation), format_number(res.sensitivity),
                     format_number(res.qfi_same_state), format_number(res.ratio_R), format_number(res.ratio_R1),
                     std::to_string(c.pool_order), family_name(c.family.kind), m_cell(c.family),
                     alpha_cell(c.family), format_number(res.theta), "true", std::to_string(s.dim_lo),
                     dim_p_cell(s)};
          if (res.no_phase_information) o.error = "pool carries no phase information (S = 0)";
        } catch (const std::exception& e) {
          o.ok = false;
          o.error = e.what();
          o.cells = {format_number(c.grid[i]), "", "", "", "", std::to_string(c.pool_order),
                     family_name(c.family.kind), m_cell(c.family), alpha_cell(c.family), "", "false", "", ""};
        }
        return o;
      });
  for (auto& p : pts) t.add_row(p.cells);
  t.write(ctx.path("sensitivity_sweep.csv"));
  return report(ctx, pts, grid_labels(c.grid, "nbar"));
}

int observable_degree(const std::string& id, int m) {
  if (id == "b3p") return 3;
  if (id == "b4p") return 4;
  return m;
}

int task_fixed(const Context& ctx) {
  const auto& c = ctx.config;
  CsvTable t({"nbar", "observable", "sensitivity", "qfi_same", "qfi_squeezed_ref", "ratio_R1", "ratio_R2", "theta",
              "family", "m", "alpha", "dim_lo", "dim_p", "converged"});
  auto pts = ctx.map(
      c.grid.size(), [&](std::size_t i) { return ctx.base_key() + "|obs=" + c.observable + "|nbar=" + hexf(c.grid[i]); },
      [&](std::size_t i) {
        PointOutput o;
        try {
          const PreparedState s = ctx.state(c.family, c.grid[i]);
          const int deg = observable_degree(c.observable, c.family.m);
          const FixedObservables obs = fixed_observables(s.dim() + 2 * deg, std::max(c.family.m, 1));
          const OperatorMatrix& a = c.observable == "b3p" ? obs.b3p : c.observable == "b4p" ? obs.b4p : obs.bms;
          FixedOptions fo;
          fo.maximize_theta = true;
          const SensitivityResult r = s.pure ? sensitivity_fixed(a, *s.pure, fo) : sensitivity_fixed(a, *s.mixed, fo);
          require_finite(r.sensitivity, "sensitivity");
          o.cells = {format_number(r.occupation), c.observable, format_number(r.sensitivity),
                     format_number(r.qfi_same_state), format_number(r.qfi_squeezed_ref), format_number(r.ratio_R1),
                     format_number(r.ratio_R2), format_number(r.theta), family_name(c.family.kind), m_cell(c.family),
                     alpha_cell(c.family), std::to_string(s.dim_lo), dim_p_cell(s), "true"};
        } catch (const std::exception& e) {
          o.ok = false;
          o.error = e.what();
          o.cells = {format_number(c.grid[i]), c.observable, "", "", "", "", "", "", family_name(c.family.kind),
                     m_cell(c.family), alpha_cell(c.family), "", "", "false"};
        }
        return o;
      });
  for (auto& p : pts) t.add_row(p.cells);
  t.write(ctx.path("fixed_obs_sweep.csv"));
  return report(ctx, pts, grid_labels(c.grid, "nbar"));
}

// working state for channel computations: leading block of a pure state, or the full mixed state
struct ChannelInput {
  MixedState state;
  int dim = 0;
};

ChannelInput channel_input(const PreparedState& s, const Truncation& t, int cap) {
  (void)t;
  if (s.pure) {
    ChannelBlockOptions o;
    o.max_dim = cap;
    ChannelBlock b = channel_block(*s.pure, o);
    return {std::move(b.state), b.dim};
  }
  if (s.mixed->dim() > cap) throw UnconvergedTruncation("channel", s.mixed->dim(), 1.0, 0.0);
  return {*s.mixed, s.mixed->dim()};
}

const FamilySpec kSqueezedFamily{FamilyKind::Squeezed, 0, 0.0, std::nullopt};

int channel_cap(const SweepConfig& c) { return std::min(c.truncation.max_dim, 2048); }

int task_decoherence(const Context& ctx) {
  const auto& c = ctx.config;
  const ChannelKind kind = *c.channel;
  CsvTable t({"s", "qfi", "qfi_squeezed_ref", "channel", "nbar", "family", "m", "alpha", "dim_lo", "dim_p",
              "channel_dim", "converged"});
  std::optional<ChannelInput> ng, ref;
  std::optional<PreparedState> ngs;
  std::string setup_error;
  try {
    ngs = ctx.state(c.family, *c.nbar);
    ng = channel_input(*ngs, c.truncation, channel_cap(c));
    ref = channel_input(ctx.state(kSqueezedFamily, *c.nbar), c.truncation, channel_cap(c));
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  const std::string base = ctx.base_key() + "|ch=" + to_string(kind) + "|nbar=" + hexf(*c.nbar);
  auto pts = ctx.map(
      c.strengths.size(), [&](std::size_t i) { return base + "|s=" + hexf(c.strengths[i]); },
      [&](std::size_t i) {
        PointOutput o;
        try {
          if (!ng) fail(ErrorKind::UnconvergedTruncation, setup_error);
          const ChannelSpec spec{kind, c.strengths[i]};
          const double f = channel_qfi(ng->state, spec);
          const double fs = channel_qfi(ref->state, spec);
          require_finite(f, "qfi");
          o.cells = {format_number(c.strengths[i]), format_number(f), format_number(fs), to_string(kind),
                     format_number(ngs->occupation), family_name(c.family.kind), m_cell(c.family),
                     alpha_cell(c.family), std::to_string(ngs->dim_lo), dim_p_cell(*ngs), std::to_string(ng->dim),
                     "true"};
        } catch (const std::exception& e) {
          o.ok = false;
          o.error = e.what();
          o.cells = {format_number(c.strengths[i]), "", "", to_string(kind), format_number(*c.nbar),
                     family_name(c.family.kind), m_cell(c.family), alpha_cell(c.family), "", "", "", "false"};
        }
        return o;
      });
  for (auto& p : pts) t.add_row(p.cells);
  t.write(ctx.path("decoherence_sweep.csv"));
  return report(ctx, pts, grid_labels(c.strengths, "s"));
}

int task_sc(const Context& ctx) {
  const auto& c = ctx.config;
  const ChannelKind kind = *c.channel;
  CsvTable t({"nbar", "s_c", "bracket_lo", "bracket_hi", "channel", "family", "m", "alpha", "found", "dim_lo",
              "dim_p", "channel_dim", "converged"});
  const std::string base = ctx.base_key() + "|ch=" + to_string(kind) + "|smax=" + hexf(c.s_max);
  auto pts = ctx.map(
      c.grid.size(), [&](std::size_t i) { return base + "|nbar=" + hexf(c.grid[i]); },
      [&](std::size_t i) {
        PointOutput o;
        const double nbar = c.grid[i];
        auto row = [&](const std::string& sc, const std::string& lo, const std::string& hi, bool found,
                       const std::string& dlo, const std::string& dp, const std::string& cd, bool conv) {
          return std::vector<std::string>{format_number(nbar), sc, lo, hi, to_string(kind),
                                          family_name(c.family.kind), m_cell(c.family), alpha_cell(c.family),
                                          format_bool(found), dlo, dp, cd, format_bool(conv)};
        };
        std::optional<PreparedState> s;
        std::optional<ChannelInput> ng;
        try {
          s = ctx.state(c.family, nbar);
          ng = channel_input(*s, c.truncation, channel_cap(c));
          const ChannelInput ref = channel_input(ctx.state(kSqueezedFamily, nbar), c.truncation, channel_cap(c));
          CriticalOptions co;
          co.s_max = c.s_max;
          const CriticalStrengthResult r = critical_strength(ng->state, ref.state, kind, co);
          o.cells = row(format_number(r.s_c), format_number(r.bracket.first), format_number(r.bracket.second), true,
                        std::to_string(s->dim_lo), dim_p_cell(*s), std::to_string(ng->dim), true);
        } catch (const NoCrossing& e) {
          o.error = e.what();
          o.cells = row("", "", "", false, std::to_string(s->dim_lo), dim_p_cell(*s), std::to_string(ng->dim), true);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::PreconditionViolated && ng) {
            o.error = e.what();
            o.cells =
                row("", "", "", false, std::to_string(s->dim_lo), dim_p_cell(*s), std::to_string(ng->dim), true);
          } else {
            o.ok = false;
            o.error = e.what();
            o.cells = row("", "", "", false, s ? std::to_string(s->dim_lo) : "", s ? dim_p_cell(*s) : "", "", false);
          }
        } catch (const std::exception& e) {
          o.ok = false;
          o.error = e.what();
          o.cells = row("", "", "", false, "", "", "", false);
        }
        return o;
      });
  for (auto& p : pts) t.add_row(p.cells);
  t.write(ctx.path("sc_sweep.csv"));
  return report(ctx, pts, grid_labels(c.grid, "nbar"));
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int task_fit(const Context& ctx) {
  const auto& c = ctx.config;
  CsvTable curves({"alpha", "nbar", "qfi", "beta", "family", "m", "dim_lo", "dim_p", "converged"});
  std::vector<std::pair<double, double>> samples;
  json jsamples = json::array();
  std::vector<PointOutput> status;
  std::vector<std::string> labels;
  for (double alpha : c.alpha_list) {
    FamilySpec f = c.family;
    f.alpha = alpha;
    std::vector<std::string> errors;
    const auto pts = compute_curve(ctx, f, c.grid, errors);
    const auto beta = betas_for(pts);
    double best = -1.0, at = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      curves.add_row({format_number(alpha), format_number(pts[i].nbar), pts[i].ok ? format_number(pts[i].qfi) : "",
                      format_number(beta[i]), family_name(f.kind), m_cell(f),
                      pts[i].ok ? std::to_string(pts[i].dim_lo) : "", pts[i].ok ? std::to_string(pts[i].dim_p) : "",
                      format_bool(pts[i].ok)});
      status.push_back({{}, pts[i].ok, errors[i]});
      labels.push_back("alpha=" + format_number(alpha) + ",nbar=" + format_number(c.grid[i]));
      if (pts[i].ok && std::isfinite(beta[i])) {
        ++used;
        if (beta[i] > best) {
          best = beta[i];
          at = pts[i].nbar;
        }
      }
    }
    if (used >= 3 && best > 0.0) samples.emplace_back(alpha, best);
    jsamples.push_back({{"alpha", alpha},
                        {"max_beta", used >= 3 ? number_or_null(best) : json(nullptr)},
                        {"nbar_at_max", used >= 3 ? number_or_null(at) : json(nullptr)},
                        {"points", used}});
  }
  curves.write(ctx.path("fit_beta_curves.csv"));
  int rc = report(ctx, status, labels);
  json out{{"task", "fit_beta"}, {"family", family_name(c.family.kind)}, {"m", c.family.m}, {"samples", jsamples}};
  if (samples.size() >= 3) {
    try {
      const FitResult fr = fit_max_beta(samples);
      out["a"] = fr.a;
      out["b"] = fr.b;
      out["stderr_a"] = fr.stderr_a;
      out["stderr_b"] = fr.stderr_b;
      out["converged"] = rc == kExitOk;
    } catch (const std::exception& e) {
      ctx.log << "fit: " << e.what() << "\n";
      out["converged"] = false;
      rc = kExitPartial;
    }
  } else {
    ctx.log << "fit: fewer than 3 usable amplitudes\n";
    out["converged"] = false;
    rc = kExitPartial;
  }
  write_text_file(ctx.path("fit_beta.json"), out.dump(2) + "\n");
  return rc;
}

int task_state_info(const Context& ctx) {
  const auto& c = ctx.config;
  json out{{"task", "state_info"}, {"family", family_name(c.family.kind)}};
  if (c.family.m > 0) out["m"] = c.family.m;
  if (c.family.kind == FamilyKind::Multisqueezed) out["alpha"] = c.family.alpha;
  int rc = kExitOk;
  try {
    const PreparedState s = c.nbar ? ctx.state(c.family, *c.nbar) : ctx.state(c.family, std::nullopt);
    const double f = state_qfi(s);
    out["parameter"] = s.parameter;
    out["occupation"] = s.occupation;
    out["qfi"] = f;
    out["qfi_squeezed_ref"] = qfi_squeezed_closed(s.occupation);
    if (c.family.kind == FamilyKind::MthPhase) out["qfi_closed"] = qfi_mth_phase_closed(c.family.m, s.occupation);
    if (c.family.kind == FamilyKind::Coherent) out["qfi_closed"] = qfi_coherent_closed(s.occupation);
    if (c.family.kind == FamilyKind::Squeezed) out["qfi_closed"] = qfi_squeezed_closed(s.occupation);
    out["dim_lo"] = s.dim_lo;
    out["tail_lo"] = s.tail_lo;
    if (s.dim_p > 0) {
      out["dim_p"] = s.dim_p;
      out["tail_p"] = s.tail_p;
      out["pump_occupation"] = s.pump_occupation;
      out["bookkeeping_residual"] = s.occupation - c.family.m * (c.family.alpha * c.family.alpha - s.pump_occupation);
    }
    out["converged"] = true;
  } catch (const std::exception& e) {
    ctx.log << "state_info: " << e.what() << "\n";
    out["converged"] = false;
    out["error"] = e.what();
    rc = kExitPartial;
  }
  write_text_file(ctx.path("state_info.json"), out.dump(2) + "\n");
  return rc;
}

// ---------------------------------------------------------------- runtime model

double state_cost(const FamilySpec& f, double nbar) {
  switch (f.kind) {
    case FamilyKind::Coherent:
    case FamilyKind::Squeezed:
    case FamilyKind::Fock: return 1e-3;
    case FamilyKind::MthPhase:
      return (f.m == 3 ? 0.05 : f.m == 4 ? 0.2 : 1.0) * std::pow(1.0 + nbar, f.m <= 4 ? 1.5 : 2.0);
    case FamilyKind::Multisqueezed:
      return 1.5 * std::pow(f.alpha / 10.0, 4) * std::pow(f.m / 3.0, 2) * (1.0 + 2.0 * nbar);
  }
  return 1.0;
}

double channel_eval_cost(const FamilySpec& f, double nbar, int cap) {
  double d = 256.0;
  if (f.kind == FamilyKind::MthPhase) d = 512.0 * std::pow(1.0 + nbar, f.m - 2.0);
  if (f.kind == FamilyKind::Multisqueezed) d = 130.0 * (1.0 + 10.0 * nbar);
  d = std::min<double>(d, cap);
  return 0.6 * std::pow(d / 1024.0, 3) + 0.01;
}

}  // namespace

MixedState PreparedState::as_mixed() const { return pure ? MixedState::from_pure(*pure) : *mixed; }

std::string serialize_state(const PreparedState& s) {
  ByteWriter w;
  w.put_u32(kStateFormat);
  w.put_u32(s.pure ? 0 : 1);
  if (s.pure) {
    put_policy(w, s.pure->policy());
    put_matrix(w, s.pure->amplitudes());
  } else {
    if (!s.mixed->factor()) throw std::runtime_error("mixed state without factor");
    put_policy(w, s.mixed->policy());
    put_matrix(w, *s.mixed->factor());
  }
  w.put_i64(s.dim_lo);
  w.put_i64(s.dim_p);
  w.put_f64(s.parameter);
  w.put_f64(s.occupation);
  w.put_f64(s.pump_occupation);
  w.put_f64(s.tail_lo);
  w.put_f64(s.tail_p);
  return w.str();
}

PreparedState deserialize_state(const std::string& payload) {
  ByteReader r(payload);
  if (r.u32() != kStateFormat) throw std::runtime_error("state format");
  const auto kind = r.u32();
  const TruncationPolicy pol = get_policy(r);
  CMat m = get_matrix(r);
  PreparedState s;
  if (kind == 0) s.pure = PureState(m.col(0), pol);
  else s.mixed = MixedState::from_factor(std::move(m), pol);
  s.dim_lo = static_cast<int>(r.i64());
  s.dim_p = static_cast<int>(r.i64());
  s.parameter = r.f64();
  s.occupation = r.f64();
  s.pump_occupation = r.f64();
  s.tail_lo = r.f64();
  s.tail_p = r.f64();
  if (!r.done()) throw std::runtime_error("trailing bytes");
  return s;
}

PreparedState prepare_state(const FamilySpec& family, std::optional<double> nbar, const Truncation& trunc,
                            const Cache& cache) {
  const std::string key = Cache::key_for(std::string(kStateSalt) + "|" + family_key(family) + "|nbar=" +
                                         (nbar ? hexf(*nbar) : std::string("none")) + "|" + truncation_key(trunc));
  if (auto hit = cache.get(key)) {
    try {
      return deserialize_state(*hit);
    } catch (const std::exception&) {
      // fall through to recompute
    }
  }
  PreparedState s = build_state(family, nbar, trunc);
  if (cache.enabled()) {
    try {
      cache.put(key, serialize_state(s));
    } catch (const std::exception&) {
    }
  }
  return s;
}

double estimate_runtime_seconds(const SweepConfig& c) {
  double total = 0.0;
  const int cap = channel_cap(c);
  auto per_grid = [&](const std::function<double(double)>& f) {
    for (double n : c.grid) total += f(n);
  };
  switch (c.task) {
    case Task::QfiSweep:
    case Task::BetaSweep: per_grid([&](double n) { return state_cost(c.family, n); }); break;
    case Task::SensitivitySweep:
      per_grid([&](double n) {
        return state_cost(c.family, n) * (1.0 + std::pow(c.pool_order / 6.0, 4));
      });
      break;
    case Task::FixedObsSweep: per_grid([&](double n) { return 1.2 * state_cost(c.family, n); }); break;
    case Task::DecoherenceSweep:
      total = state_cost(c.family, *c.nbar) +
              2.0 * static_cast<double>(c.strengths.size()) * channel_eval_cost(c.family, *c.nbar, cap);
      break;
    case Task::ScSweep:
      per_grid([&](double n) { return state_cost(c.family, n) + 48.0 * channel_eval_cost(c.family, n, cap); });
      break;
    case Task::FitBeta:
      for (double a : c.alpha_list) {
        FamilySpec f = c.family;
        f.alpha = a;
        for (double n : c.grid) total += state_cost(f, n);
      }
      break;
    case Task::StateInfo: total = state_cost(c.family, c.nbar.value_or(1.0)); break;
  }
  return total / std::max(1, c.workers);
}

int run(const SweepConfig& config, const RunOptions& options) {
  linalg::set_blas_threads(1);
  SweepConfig c = config;
  if (options.workers) c.workers = *options.workers;
  Context ctx(c, options);
  const double est = estimate_runtime_seconds(c);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s: estimated runtime %.0f s with %d worker(s)\n", task_name(c.task), est,
                c.workers);
  ctx.log << buf;
  if (est > kLongRunSeconds && !options.allow_long) {
    ctx.log << "refusing a long run without --allow-long\n";
    return kExitConfig;
  }
  try {
    fs::create_directories(ctx.out_dir);
  } catch (const std::exception& e) {
    ctx.log << "config error: field 'output': " << e.what() << "\n";
    return kExitConfig;
  }
  switch (c.task) {
    case Task::QfiSweep: return task_qfi(ctx);
    case Task::BetaSweep: return task_beta(ctx);
    case Task::SensitivitySweep: return task_sensitivity(ctx);
    case Task::FixedObsSweep: return task_fixed(ctx);
    case Task::DecoherenceSweep: return task_decoherence(ctx);
    case Task::ScSweep: return task_sc(ctx);
    case Task::FitBeta: return task_fit(ctx);
    case Task::StateInfo: return task_state_info(ctx);
  }
  return kExitConfig;
}

}  // namespace fockmetro::cli
