#include "mlpmcmc/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mlpmcmc {
namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double gaussian_logpdf(double value, double mean, double sd) {
  const double z = (value - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kHalfLogTwoPi;
}

// Index of log sigma / log tau in the parameter vector, or -1 if absent.
struct Layout {
  Index log_sigma = -1;
  Index log_tau = -1;
};

Layout layout_of(const ModelSpec& model) {
  Layout layout;
  for (Index i = 0; i < model.parameter_dim(); ++i) {
    const auto& n = model.parameter_names[static_cast<std::size_t>(i)];
    if (n == "log_sigma") layout.log_sigma = i;
    if (n == "log_tau") layout.log_tau = i;
  }
  return layout;
}

ModelSpec kuramoto_family(const KuramotoOptions& options, std::string name, bool modified) {
  ModelSpec model;
  model.name = std::move(name);
  model.dim = 1;
  model.obs_dim = 1;
  model.x0 = Vector::Constant(1, options.x0);

  const bool fixed = options.sigma_fixed;
  const double fixed_sigma = options.fixed_sigma;
  if (fixed) {
    if (!(fixed_sigma > 0.0)) throw std::invalid_argument("fixed_sigma must be positive");
    model.parameter_names = {"theta", "log_tau"};
  } else {
    model.parameter_names = {"theta", "log_sigma", "log_tau"};
  }
  const Index tau_index = fixed ? 1 : 2;

  model.drift = [](const Parameter& p, ConstVectorRef, double mf, VectorRef out) {
    out[0] = p[0] + mf;
  };
  if (options.interaction) {
    model.interaction = [](const Parameter&, ConstVectorRef x, ConstVectorRef other) {
      return std::sin(x[0] - other[0]);
    };
    // sin(x - y) = sin x cos y - cos x sin y
    SeparableInteraction sep;
    sep.rank = 2;
    sep.left = [](const Parameter&, ConstVectorRef x, VectorRef out) {
      const double v = x[0];
      const double s = std::sin(v), c = std::cos(v);
      out[0] = s;
      out[1] = -c;
    };
    sep.right = [](const Parameter&, ConstVectorRef y, VectorRef out) {
      const double v = y[0];
      const double s = std::sin(v), c = std::cos(v);
      out[0] = c;
      out[1] = s;
    };
    model.separable = std::move(sep);
    model.interaction_bound = 1.0;
  } else {
    model.interaction = [](const Parameter&, ConstVectorRef, ConstVectorRef) { return 0.0; };
    model.separable = SeparableInteraction{};
    model.interaction_bound = 0.0;
  }

  if (modified) {
    model.diffusion = [fixed, fixed_sigma](const Parameter& p, ConstVectorRef x, MatrixRef out) {
      const double sigma = fixed ? fixed_sigma : std::exp(p[1]);
      out(0, 0) = sigma / (1.0 + x[0] * x[0]);
    };
  } else {
    model.diffusion = [fixed, fixed_sigma](const Parameter& p, ConstVectorRef, MatrixRef out) {
      out(0, 0) = fixed ? fixed_sigma : std::exp(p[1]);
    };
    model.constant_diffusion = true;
  }

  model.obs_logdensity = [tau_index](const Parameter& p, ConstVectorRef x, ConstVectorRef y) {
    return gaussian_logpdf(y[0], x[0], std::exp(p[tau_index]));
  };
  model.obs_sample = [tau_index](const Parameter& p, ConstVectorRef x, RandomStream& s) {
    Vector y(1);
    y[0] = x[0] + std::exp(p[tau_index]) * s.normal();
    return y;
  };
  model.prior = options.prior.value_or(GaussianPrior::standard(model.parameter_dim()));
  model.validate();
  return model;
}

}  // namespace

Parameter::Parameter(std::initializer_list<double> values) : values_(values.size()) {
  Index i = 0;
  for (double v : values) values_[i++] = v;
}

GaussianPrior GaussianPrior::standard(Index dim) {
  return GaussianPrior{Vector::Zero(dim), Vector::Ones(dim)};
}

double GaussianPrior::log_density(const Parameter& p) const {
  if (p.size() != mean.size()) throw std::invalid_argument("prior/parameter dimension mismatch");
  double total = 0.0;
  for (Index i = 0; i < p.size(); ++i) total += gaussian_logpdf(p[i], mean[i], sd[i]);
  return total;
}

Parameter GaussianPrior::sample(RandomStream& stream) const {
  Vector v(mean.size());
  for (Index i = 0; i < v.size(); ++i) v[i] = mean[i] + sd[i] * stream.normal();
  return Parameter(std::move(v));
}

void ModelSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("model dimension must be positive");
  if (x0.size() != dim) throw std::invalid_argument("x0 has the wrong dimension");
  if (!x0.allFinite()) throw std::invalid_argument("x0 must be finite");
  if (!drift || !interaction || !diffusion || !obs_logdensity || !obs_sample)
    throw std::invalid_argument("model " + name + " is missing a component function");
  if (prior.mean.size() != parameter_dim() || prior.sd.size() != parameter_dim())
    throw std::invalid_argument("prior dimension does not match the parameter names");
  if ((prior.sd.array() <= 0.0).any()) throw std::invalid_argument("prior sd must be positive");
  if (separable && separable->rank > SeparableInteraction::kMaxRank)
    throw std::invalid_argument("separable interaction rank too large");
}

ModelSpec kuramoto_model(const KuramotoOptions& options) {
  return kuramoto_family(options, "kuramoto", false);
}

ModelSpec modified_kuramoto_model(const KuramotoOptions& options) {
  return kuramoto_family(options, "modified_kuramoto", true);
}

ModelSpec model_by_name(const std::string& name, const KuramotoOptions& options) {
  if (name == "kuramoto") return kuramoto_model(options);
  if (name == "modified_kuramoto") return modified_kuramoto_model(options);
  throw std::invalid_argument("unknown model '" + name + "' (expected kuramoto or modified_kuramoto)");
}

ModelSpec linear_gaussian_model(LinearGaussianSpec spec, std::optional<GaussianPrior> prior) {
  const Index d = spec.x0.size();
  if (spec.drift_matrix.rows() != d || spec.drift_matrix.cols() != d ||
      spec.drift_direction.size() != d || spec.diffusion_shape.rows() != d ||
      spec.diffusion_shape.cols() != d || spec.observation_matrix.cols() != d)
    throw std::invalid_argument("linear-Gaussian spec has inconsistent dimensions");

  ModelSpec model;
  model.name = "linear_gaussian";
  model.dim = d;
  model.obs_dim = spec.observation_matrix.rows();
  model.x0 = spec.x0;
  model.parameter_names = {"theta", "log_sigma", "log_tau"};

  const Matrix B = spec.drift_matrix;
  const Vector c = spec.drift_direction;
  const Matrix S = spec.diffusion_shape;
  const Matrix H = spec.observation_matrix;
  model.drift = [B, c](const Parameter& p, ConstVectorRef x, double, VectorRef out) {
    out.noalias() = B * x;
    out += p[0] * c;
  };
  model.interaction = [](const Parameter&, ConstVectorRef, ConstVectorRef) { return 0.0; };
  model.separable = SeparableInteraction{};
  model.interaction_bound = 0.0;
  model.diffusion = [S](const Parameter& p, ConstVectorRef, MatrixRef out) {
    out = std::exp(p[1]) * S;
  };
  model.constant_diffusion = true;
  model.obs_logdensity = [H](const Parameter& p, ConstVectorRef x, ConstVectorRef y) {
    const double tau = std::exp(p[2]);
    const Vector r = y - H * x;
    return -0.5 * r.squaredNorm() / (tau * tau) -
           static_cast<double>(r.size()) * (std::log(tau) + kHalfLogTwoPi);
  };
  model.obs_sample = [H](const Parameter& p, ConstVectorRef x, RandomStream& s) {
    Vector y = H * x;
    for (Index i = 0; i < y.size(); ++i) y[i] += std::exp(p[2]) * s.normal();
    return y;
  };
  model.prior = prior.value_or(GaussianPrior::standard(3));
  model.linear = std::move(spec);
  model.validate();
  return model;
}

double diffusion_scale(const ModelSpec& model, const Parameter& p) {
  const Layout layout = layout_of(model);
  if (layout.log_sigma < 0) throw std::invalid_argument("model has no log_sigma coordinate");
  return std::exp(p[layout.log_sigma]);
}

double observation_scale(const ModelSpec& model, const Parameter& p) {
  const Layout layout = layout_of(model);
  if (layout.log_tau < 0) throw std::invalid_argument("model has no log_tau coordinate");
  return std::exp(p[layout.log_tau]);
}

Parameter natural_parameter(const ModelSpec& model, double theta, double sigma, double tau) {
  if (!(sigma > 0.0) || !(tau > 0.0)) throw std::invalid_argument("sigma and tau must be positive");
  const Layout layout = layout_of(model);
  Vector v = Vector::Zero(model.parameter_dim());
  v[0] = theta;
  if (layout.log_sigma >= 0) v[layout.log_sigma] = std::log(sigma);
  if (layout.log_tau >= 0) v[layout.log_tau] = std::log(tau);
  return Parameter(std::move(v));
}

ObservationSeries::ObservationSeries(std::vector<Vector> values) : y(std::move(values)) {
  if (y.empty()) throw std::invalid_argument("observation series must be non-empty");
  for (const auto& v : y)
    if (!v.allFinite()) throw std::invalid_argument("observations must be finite");
}

}  // namespace mlpmcmc
