#include "adalista/training.hpp"

#include "adalista/parallel.hpp"
#include "unroll_engine.hpp"
#include "unrolled_layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace adalista {

using detail::Record;

namespace {

constexpr std::size_t kChunk = 8;

const Dictionary& need_dictionary(const TrainingTriple& t) {
  if (!t.dictionary) throw std::invalid_argument("training sample has no dictionary");
  return *t.dictionary;
}

const Mask& need_mask(const TrainingTriple& t) {
  if (!t.mask) throw std::invalid_argument("training sample has no mask");
  return *t.mask;
}

// Accumulates the gradient of one sample into `acc` and returns its loss.
double accumulate_backward(const TrainingTriple& s, const Model& model, GradientSet& acc) {
  const int K = model.depth();
  auto residual = [&](const Vector& xK) {
    require_same_size(xK.size(), s.x_ref.size(), "loss: reference code");
    return Vector(xK - s.x_ref);
  };

  switch (model.variant) {
  case Variant::AdaLista:
  case Variant::AdaLfista: {
    const auto& p = std::get<AdaListaParams>(model.params);
    auto& g = std::get<AdaListaParams>(acc.params);
    const Dictionary& dict = need_dictionary(s);
    const detail::AdaLayers L(s.y, dict, p);
    const auto tape = detail::unroll(
        K, dict.code_dim(), model.variant == Variant::AdaLfista, Record::Full,
        [&](int k, const Vector& z) { return L.affine(k, z); }, [&](int k) { return p.theta[k - 1]; });
    const Vector r = residual(tape.x.back());
    Matrix gA = Matrix::Zero(L.A.rows(), L.A.cols());
    Vector gb = Vector::Zero(L.A.cols());
    detail::unroll_backward(
        tape, 2.0 * r, [&](int k) { return p.theta[k - 1]; }, [](int k) { return k - 1; }, g.theta,
        [&](int k, const Vector& z, const Vector& gu) {
          const double step = p.gamma[k - 1];
          const Vector Az = L.A * z;
          const Vector Agu = L.A * gu;
          g.gamma[k - 1] += gu.dot(L.b - L.A.transpose() * Az);
          gA.noalias() -= step * (Az * gu.transpose() + Agu * z.transpose());
          gb += step * gu;
          return Vector(gu - step * (L.A.transpose() * Agu));
        });
    g.W1.noalias() += gA * L.D.transpose();
    const Vector Dgb = L.D * gb;
    g.W2.noalias() += s.y * Dgb.transpose();
    return r.squaredNorm();
  }
  case Variant::Single: {
    const auto& p = std::get<SingleMatrixParams>(model.params);
    auto& g = std::get<SingleMatrixParams>(acc.params);
    const Dictionary& dict = need_dictionary(s);
    const detail::SingleLayers L(s.y, dict, p);
    const auto tape = detail::unroll(
        K, dict.code_dim(), false, Record::Full, [&](int k, const Vector& z) { return L.affine(k, z); },
        [&](int k) { return p.theta[k - 1]; });
    const Vector r = residual(tape.x.back());
    Matrix gA = Matrix::Zero(L.A.rows(), L.A.cols());
    detail::unroll_backward(
        tape, 2.0 * r, [&](int k) { return p.theta[k - 1]; }, [](int k) { return k - 1; }, g.theta,
        [&](int, const Vector& z, const Vector& gu) {
          const Vector res = s.y - L.D * z;
          gA.noalias() += res * gu.transpose();
          const Vector Agu = L.A * gu;
          return Vector(gu - L.D.transpose() * Agu);
        });
    g.W.noalias() += gA * L.D.transpose();
    return r.squaredNorm();
  }
  case Variant::Lista: {
    const auto& p = std::get<ListaParams>(model.params);
    auto& g = std::get<ListaParams>(acc.params);
    const detail::ListaLayers L(s.y, p);
    const bool shared = p.theta.size() == 1;
    const auto tape = detail::unroll(
        K, p.W2.rows(), false, Record::Full, [&](int k, const Vector& z) { return L.affine(k, z); },
        [&](int k) { return p.threshold(k - 1); });
    const Vector r = residual(tape.x.back());
    Vector g_drive = Vector::Zero(p.W2.rows());
    detail::unroll_backward(
        tape, 2.0 * r, [&](int k) { return p.threshold(k - 1); },
        [shared](int k) { return shared ? 0 : k - 1; }, g.theta,
        [&](int, const Vector& z, const Vector& gu) {
          g_drive += gu;
          g.W2.noalias() += gu * z.transpose();
          return Vector(p.W2.transpose() * gu);
        });
    g.W1.noalias() += g_drive * s.y.transpose();
    return r.squaredNorm();
  }
  case Variant::Inpaint: {
    const auto& p = std::get<InpaintParams>(model.params);
    auto& g = std::get<InpaintParams>(acc.params);
    const Mask& M = need_mask(s);
    const detail::InpaintLayers L(s.y, M, p);
    const auto tape = detail::unroll(
        K, p.W1.cols(), p.momentum, Record::Full, [&](int k, const Vector& z) { return L.affine(k, z); },
        [&](int k) { return p.theta[k - 1]; });
    const Vector r = residual(tape.x.back());
    Matrix gA = Matrix::Zero(L.A.rows(), L.A.cols());
    Vector gb = Vector::Zero(L.A.cols());
    detail::unroll_backward(
        tape, 2.0 * r, [&](int k) { return p.theta[k - 1]; }, [](int k) { return k - 1; }, g.theta,
        [&](int k, const Vector& z, const Vector& gu) {
          const double step = p.gamma[k - 1];
          const Vector Az = L.A * z;
          const Vector Agu = L.A * gu;
          g.gamma[k - 1] += gu.dot(L.b - L.A.transpose() * Az);
          gA.noalias() -= step * (Az * gu.transpose() + Agu * z.transpose());
          gb += step * gu;
          return Vector(gu - step * (L.A.transpose() * Agu));
        });
    g.W1 += M.apply_rows(gA);
    g.W2.noalias() += L.masked_y * gb.transpose();
    return r.squaredNorm();
  }
  }
  throw std::invalid_argument("backward: unknown variant");
}

void add_into(GradientSet& acc, const GradientSet& other) {
  auto dst = tensors(acc);
  const auto src = tensors(other);
  for (std::size_t t = 0; t < dst.size(); ++t)
    for (std::size_t i = 0; i < dst[t].size(); ++i) dst[t][i] += src[t][i];
}

// Gradient and summed loss over the samples selected by `indices`. Chunks of
// kChunk consecutive indices are reduced sequentially and then combined in
// chunk order, so the result is independent of the worker count.
std::pair<GradientSet, double> gradient_over(std::span<const TrainingTriple> data,
                                             std::span<const std::size_t> indices, const Model& model) {
  const std::size_t chunks = (indices.size() + kChunk - 1) / kChunk;
  std::vector<GradientSet> partial(chunks);
  std::vector<double> partial_loss(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    GradientSet g = zeros_like(model);
    double l = 0.0;
    const std::size_t end = std::min(indices.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) l += accumulate_backward(data[indices[i]], model, g);
    partial[c] = std::move(g);
    partial_loss[c] = l;
  });
  GradientSet total = zeros_like(model);
  double loss_sum = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    add_into(total, partial[c]);
    loss_sum += partial_loss[c];
  }
  return {std::move(total), loss_sum};
}

void clamp_thresholds(Model& model) {
  auto t = tensors(model)[threshold_tensor(model)];
  for (double& v : t) v = std::max(v, 0.0);
}

void check_same_shapes(const Model& a, const Model& b) {
  if (a.variant != b.variant) throw std::invalid_argument("gradient set belongs to a different variant");
  const auto ta = tensors(a);
  const auto tb = tensors(b);
  if (ta.size() != tb.size()) throw std::invalid_argument("gradient set shape mismatch");
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (ta[i].size() != tb[i].size()) throw std::invalid_argument("gradient set shape mismatch");
}

} // namespace

double sample_loss(const TrainingTriple& triple, const Model& model) {
  const Vector xK = forward(model, triple.y, triple.input());
  require_same_size(xK.size(), triple.x_ref.size(), "loss: reference code");
  return (xK - triple.x_ref).squaredNorm();
}

double loss(std::span<const TrainingTriple> batch, const Model& model) {
  require(!batch.empty(), "loss: empty batch");
  std::vector<double> per(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) { per[i] = sample_loss(batch[i], model); });
  return std::accumulate(per.begin(), per.end(), 0.0);
}

GradientSet backward(const TrainingTriple& triple, const Model& model) {
  GradientSet g = zeros_like(model);
  accumulate_backward(triple, model, g);
  return g;
}

GradientSet batch_gradient(std::span<const TrainingTriple> batch, const Model& model) {
  require(!batch.empty(), "batch_gradient: empty batch");
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  return gradient_over(batch, idx, model).first;
}

GradientSet finite_diff_grad(const TrainingTriple& triple, const Model& model, double h) {
  require(h > 0.0, "finite_diff_grad: step must be positive");
  GradientSet g = zeros_like(model);
  Model probe = model;
  auto probe_t = tensors(probe);
  auto g_t = tensors(g);
  for (std::size_t t = 0; t < probe_t.size(); ++t) {
    for (std::size_t i = 0; i < probe_t[t].size(); ++i) {
      const double orig = probe_t[t][i];
      probe_t[t][i] = orig + h;
      const double up = sample_loss(triple, probe);
      probe_t[t][i] = orig - h;
      const double down = sample_loss(triple, probe);
      probe_t[t][i] = orig;
      g_t[t][i] = (up - down) / (2.0 * h);
    }
  }
  return g;
}

AdamState adam_init(const Model& model) { return {zeros_like(model), zeros_like(model), 0}; }

void adam_step(Model& model, const GradientSet& grads, AdamState& state, const TrainConfig& cfg) {
  check_same_shapes(model, grads);
  check_same_shapes(model, state.first_moment);
  check_same_shapes(model, state.second_moment);
  const auto& a = cfg.adam;
  ++state.step;
  const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(state.step));
  auto p = tensors(model);
  const auto g = tensors(grads);
  auto m = tensors(state.first_moment);
  auto v = tensors(state.second_moment);
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      m[t][i] = a.beta1 * m[t][i] + (1.0 - a.beta1) * g[t][i];
      v[t][i] = a.beta2 * v[t][i] + (1.0 - a.beta2) * g[t][i] * g[t][i];
      const double mhat = m[t][i] / c1;
      const double vhat = v[t][i] / c2;
      p[t][i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + a.epsilon);
    }
  }
  clamp_thresholds(model);
}

void sgd_step(Model& model, const GradientSet& grads, const TrainConfig& cfg) {
  check_same_shapes(model, grads);
  auto p = tensors(model);
  const auto g = tensors(grads);
  for (std::size_t t = 0; t < p.size(); ++t)
    for (std::size_t i = 0; i < p[t].size(); ++i) p[t][i] -= cfg.learning_rate * g[t][i];
  clamp_thresholds(model);
}

double mean_squared_error(std::span<const TrainingTriple> data, const Model& model, std::optional<int> layers) {
  require(!data.empty(), "mean_squared_error: empty set");
  std::vector<double> per(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const Vector xK = forward(model, data[i].y, data[i].input(), layers);
    per[i] = (xK - data[i].x_ref).squaredNorm();
  });
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(data.size());
}

TrainResult train(std::span<const TrainingTriple> dataset, Model init, const TrainConfig& cfg,
                  std::span<const TrainingTriple> validation) {
  require(!dataset.empty(), "train: empty dataset");
  require(cfg.batch_size >= 1, "train: batch size must be >= 1");
  require(cfg.learning_rate > 0.0, "train: learning rate must be positive");
  require(cfg.epochs >= 0, "train: negative epoch count");
  validate(init);

  TrainResult result{std::move(init), {}};
  Model& model = result.model;
  AdamState adam = adam_init(model);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t batches = (order.size() + batch - 1) / batch;

  auto val_mse = [&] { return validation.empty() ? 0.0 : mean_squared_error(validation, model); };

  {
    std::vector<double> per(dataset.size());
    parallel_for(dataset.size(), [&](std::size_t i) { per[i] = sample_loss(dataset[i], model); });
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      double s = 0.0;
      for (std::size_t i = b * batch; i < std::min(order.size(), (b + 1) * batch); ++i) s += per[i];
      total += s;
    }
    result.history.push_back({0, total / static_cast<double>(batches), val_mse()});
  }

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * batch;
      const std::size_t end = std::min(order.size(), begin + batch);
      auto [grads, batch_loss] =
          gradient_over(dataset, std::span<const std::size_t>(order.data() + begin, end - begin), model);
      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "train: loss became non-finite at epoch " << epoch;
        throw NumericError(os.str());
      }
      total += batch_loss;
      if (cfg.optimizer == OptimizerKind::Adam)
        adam_step(model, grads, adam, cfg);
      else
        sgd_step(model, grads, cfg);
    }
    result.history.push_back({epoch, total / static_cast<double>(batches), val_mse()});
  }
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,val_mse\n";
  for (const auto& r : history) os << r.epoch << ',' << r.train_loss << ',' << r.val_mse << '\n';
  return os.str();
}

} // namespace adalista
