#include "normstab/normstab.h"

#include <new>
#include <string>

#include "normstab/driver.hpp"
#include "normstab/errors.hpp"

using namespace normstab;

struct ns_matrix {
  SquareMatrix m;
};

struct ns_spectrum {
  SpectrumReport r;
};

struct ns_split {
  SpectralSplit s;
};

struct ns_problem {
  BuiltinProblem p;
  ClassifyTolerances tol;
};

struct ns_classification {
  Classification c;
  std::string failed;
};

struct ns_report {
  std::string json;
  std::vector<std::string> names;
  std::vector<std::string> csv;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_kind;

int fail(int status, const std::string& kind, const std::string& msg) {
  g_kind = kind;
  g_error = msg;
  return status;
}

template <class F>
int guarded(F&& f) {
  try {
    f();
    g_error.clear();
    g_kind.clear();
    return NS_OK;
  } catch (const Error& e) {
    const int status = e.code() == ErrorCode::ConfigError ? NS_ERR_CONFIG
                       : e.code() == ErrorCode::InvalidArgument ? NS_ERR_ARGUMENT
                                                                 : NS_ERR_NUMERICAL;
    return fail(status, std::string(to_string(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NS_ERR_INTERNAL, "Internal", "out of memory");
  } catch (const std::exception& e) {
    return fail(NS_ERR_INTERNAL, "Internal", e.what());
  } catch (...) {
    return fail(NS_ERR_INTERNAL, "Internal", "unknown exception");
  }
}

int null_arg(const char* what) { return fail(NS_ERR_ARGUMENT, "InvalidArgument", std::string(what) + " is null"); }

int group_code(SpectralGroup g) {
  switch (g) {
    case SpectralGroup::Center: return NS_GROUP_CENTER;
    case SpectralGroup::Stable: return NS_GROUP_STABLE;
    case SpectralGroup::Unstable: return NS_GROUP_UNSTABLE;
    case SpectralGroup::Ambiguous: return NS_GROUP_AMBIGUOUS;
  }
  return NS_GROUP_AMBIGUOUS;
}

void copy_row_major(const Matrix& m, double* out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
}

}  // namespace

extern "C" {

const char* ns_version(void) { return normstab::version(); }

const char* ns_last_error(void) { return g_error.c_str(); }

const char* ns_last_error_kind(void) { return g_kind.c_str(); }

const char* ns_status_string(int status) {
  switch (status) {
    case NS_OK: return "ok";
    case NS_ERR_ARGUMENT: return "invalid argument";
    case NS_ERR_CONFIG: return "configuration error";
    case NS_ERR_NUMERICAL: return "numerical failure";
    case NS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int ns_matrix_create(int n, const double* row_major, ns_matrix** out) {
  if (!row_major) return null_arg("entries");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "matrix size must be >= 1");
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = row_major[i * n + j];
    *out = new ns_matrix{SquareMatrix(std::move(m))};
  });
}

int ns_matrix_size(const ns_matrix* m) { return m ? m->m.n() : -1; }

void ns_matrix_free(ns_matrix* m) { delete m; }

int ns_eigen_decompose(const ns_matrix* a, double tol_zero, double gap, ns_spectrum** out) {
  if (!a) return null_arg("matrix");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    if (!(tol_zero > 0.0) || !(gap > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
    *out = new ns_spectrum{eigen_decompose(a->m, SpectralTolerances{tol_zero, gap})};
  });
}

int ns_spectrum_size(const ns_spectrum* s) { return s ? static_cast<int>(s->r.eigenvalues.size()) : -1; }

int ns_spectrum_eigenvalue(const ns_spectrum* s, int i, double* re, double* im, int* group) {
  if (!s) return null_arg("spectrum");
  if (i < 0 || i >= static_cast<int>(s->r.eigenvalues.size()))
    return fail(NS_ERR_ARGUMENT, "InvalidArgument", "eigenvalue index out of range");
  if (re) *re = s->r.eigenvalues[i].real();
  if (im) *im = s->r.eigenvalues[i].imag();
  if (group) *group = group_code(s->r.groups[i]);
  return NS_OK;
}

int ns_spectrum_counts(const ns_spectrum* s, int* mc, int* ms, int* mu, int* inconclusive) {
  if (!s) return null_arg("spectrum");
  if (mc) *mc = s->r.count(SpectralGroup::Center);
  if (ms) *ms = s->r.count(SpectralGroup::Stable);
  if (mu) *mu = s->r.count(SpectralGroup::Unstable);
  if (inconclusive) *inconclusive = s->r.inconclusive ? 1 : 0;
  return NS_OK;
}

double ns_spectrum_gap_margin(const ns_spectrum* s) { return s ? s->r.gap_margin : -1.0; }

void ns_spectrum_free(ns_spectrum* s) { delete s; }

int ns_semisimple_zero(const ns_matrix* a, double tol_zero, int* semisimple, int* kernel_dim) {
  if (!a) return null_arg("matrix");
  return guarded([&] {
    if (!(tol_zero > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol_zero must be positive");
    const SemisimpleReport r = semisimple_zero(a->m, tol_zero);
    if (semisimple) *semisimple = r.semisimple ? 1 : 0;
    if (kernel_dim) *kernel_dim = r.kernel_dim;
  });
}

int ns_spectral_projections(const ns_matrix* a, const ns_spectrum* s, double eps_proj, ns_split** out) {
  if (!a) return null_arg("matrix");
  if (!s) return null_arg("spectrum");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    if (s->r.eigenvalues.size() != static_cast<std::size_t>(a->m.n()))
      throw Error(ErrorCode::InvalidArgument, "spectrum does not belong to this matrix");
    *out = new ns_split{spectral_projections(a->m, s->r, eps_proj)};
  });
}

int ns_split_projection(const ns_split* s, int group, double* out) {
  if (!s) return null_arg("split");
  if (!out) return null_arg("out");
  switch (group) {
    case NS_GROUP_CENTER: copy_row_major(s->s.Pc, out); return NS_OK;
    case NS_GROUP_STABLE: copy_row_major(s->s.Ps, out); return NS_OK;
    case NS_GROUP_UNSTABLE: copy_row_major(s->s.Pu, out); return NS_OK;
  }
  return fail(NS_ERR_ARGUMENT, "InvalidArgument", "group must be center, stable or unstable");
}

int ns_split_dims(const ns_split* s, int* mc, int* ms, int* mu) {
  if (!s) return null_arg("split");
  if (mc) *mc = s->s.mc;
  if (ms) *ms = s->s.ms;
  if (mu) *mu = s->s.mu;
  return NS_OK;
}

int ns_split_residuals(const ns_split* s, double out[4]) {
  if (!s) return null_arg("split");
  if (!out) return null_arg("out");
  out[0] = s->s.idempotence_residual;
  out[1] = s->s.completeness_residual;
  out[2] = s->s.cross_residual;
  out[3] = s->s.commutation_residual;
  return NS_OK;
}

void ns_split_free(ns_split* s) { delete s; }

int ns_problem_builtin(const char* name, ns_problem** out) {
  if (!name) return null_arg("name");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new ns_problem{builtin_problem(name), ClassifyTolerances{}}; });
}

int ns_problem_from_config(const char* config_json, ns_problem** out) {
  if (!config_json) return null_arg("config");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    ProblemConfig cfg = parse_config(config_json);
    if (cfg.kind != ConfigKind::Builtin && cfg.kind != ConfigKind::Polynomial)
      throw Error(ErrorCode::ConfigError, "config: a problem needs a builtin or polynomial field");
    *out = new ns_problem{std::move(cfg.problem), cfg.tolerances.classify()};
  });
}

int ns_problem_dimension(const ns_problem* p) { return p ? p->p.field.n : -1; }

void ns_problem_free(ns_problem* p) { delete p; }

int ns_classify(const ns_problem* p, ns_classification** out) {
  if (!p) return null_arg("problem");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto* c = new ns_classification{classify(p->p.field, p->p.chart, p->tol), {}};
    for (const std::string& l : c->c.failed_labels()) {
      if (!c->failed.empty()) c->failed += ",";
      c->failed += l;
    }
    *out = c;
  });
}

int ns_classification_verdict(const ns_classification* c) {
  if (!c) return null_arg("classification") * -1;
  switch (c->c.verdict) {
    case Verdict::NormallyStable: return NS_NORMALLY_STABLE;
    case Verdict::NormallyHyperbolic: return NS_NORMALLY_HYPERBOLIC;
    case Verdict::Inconclusive: return NS_INCONCLUSIVE;
  }
  return NS_INCONCLUSIVE;
}

int ns_classification_dims(const ns_classification* c, int* mc, int* ms, int* mu) {
  if (!c) return null_arg("classification");
  if (mc) *mc = c->c.mc;
  if (ms) *ms = c->c.ms;
  if (mu) *mu = c->c.mu;
  return NS_OK;
}

const char* ns_classification_failed(const ns_classification* c) { return c ? c->failed.c_str() : ""; }

int ns_classification_a0(const ns_classification* c, double* out) {
  if (!c) return null_arg("classification");
  if (!out) return null_arg("out");
  if (c->c.a0.size() == 0) return fail(NS_ERR_NUMERICAL, "NotAnEquilibrium", "no linearization available");
  copy_row_major(c->c.a0, out);
  return NS_OK;
}

void ns_classification_free(ns_classification* c) { delete c; }

int ns_run(const char* command, const char* config_json, const char* params_json, ns_report** out) {
  if (!command) return null_arg("command");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    Json params = Json::object();
    if (params_json && *params_json) {
      try {
        params = Json::parse(params_json);
      } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("params: ") + e.what());
      }
    }
    RunReport r = run_command(command, config_json ? config_json : "", params);
    auto* rep = new ns_report;
    rep->json = r.to_json();
    for (const Series& s : r.series) {
      rep->names.push_back(s.name);
      rep->csv.push_back(s.to_csv());
    }
    *out = rep;
  });
}

const char* ns_report_json(const ns_report* r) { return r ? r->json.c_str() : ""; }

int ns_report_series_count(const ns_report* r) { return r ? static_cast<int>(r->names.size()) : -1; }

const char* ns_report_series_name(const ns_report* r, int i) {
  if (!r || i < 0 || i >= static_cast<int>(r->names.size())) return nullptr;
  return r->names[i].c_str();
}

const char* ns_report_series_csv(const ns_report* r, int i) {
  if (!r || i < 0 || i >= static_cast<int>(r->csv.size())) return nullptr;
  return r->csv[i].c_str();
}

void ns_report_free(ns_report* r) { delete r; }

}  // extern "C"
