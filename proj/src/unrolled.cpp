#include "adalista/unrolled.hpp"

#include "unroll_engine.hpp"
#include "unrolled_layers.hpp"

#include <sstream>

namespace adalista {

using detail::Record;

namespace {

SolverTrace to_trace(detail::Tape&& tape) {
  SolverTrace trace;
  trace.codes = std::move(tape.x);
  return trace;
}

void check_depth_vectors(const Vector& theta, const Vector* gamma, const char* what) {
  require(theta.size() >= 1, std::string(what) + ": depth must be >= 1");
  for (Index i = 0; i < theta.size(); ++i)
    require(theta[i] >= 0.0, std::string(what) + ": thresholds must be nonnegative");
  if (gamma) require_same_size(gamma->size(), theta.size(), what);
}

template <class Layers>
detail::Tape run_ada(const Layers& layers, const Vector& theta, int K, bool momentum, Record record) {
  return detail::unroll(
      K, layers.A.cols(), momentum, record, [&](int k, const Vector& z) { return layers.affine(k, z); },
      [&](int k) { return theta[k - 1]; });
}

detail::Tape ada_tape(const Signal& y, const Dictionary& D, const AdaListaParams& p,
                      std::optional<int> layers, bool momentum, Record record) {
  check_depth_vectors(p.theta, &p.gamma, "ada_lista");
  const int K = detail::resolve_layers(layers, p.depth(), "ada_lista");
  const detail::AdaLayers prepared(y, D, p);
  return run_ada(prepared, p.theta, K, momentum, record);
}

detail::Tape single_tape(const Signal& y, const Dictionary& D, const SingleMatrixParams& p,
                         std::optional<int> layers, Record record) {
  check_depth_vectors(p.theta, nullptr, "single");
  const int K = detail::resolve_layers(layers, p.depth(), "single");
  const detail::SingleLayers prepared(y, D, p);
  return detail::unroll(
      K, D.code_dim(), false, record, [&](int k, const Vector& z) { return prepared.affine(k, z); },
      [&](int k) { return p.theta[k - 1]; });
}

detail::Tape lista_tape(const Signal& y, const ListaParams& p, std::optional<int> layers, Record record) {
  require(p.theta.size() >= 1, "lista: missing threshold");
  for (Index i = 0; i < p.theta.size(); ++i) require(p.theta[i] >= 0.0, "lista: thresholds must be nonnegative");
  require_same_size(p.W2.rows(), p.W2.cols(), "lista: W2 must be square");
  require_same_size(p.W1.rows(), p.W2.rows(), "lista: W1 rows vs W2");
  const int K = layers.value_or(p.layers);
  require(K >= 0, "lista: negative depth");
  if (p.theta.size() > 1) require(K <= p.theta.size(), "lista: requested depth exceeds threshold count");
  const detail::ListaLayers prepared(y, p);
  return detail::unroll(
      K, p.W2.rows(), false, record, [&](int k, const Vector& z) { return prepared.affine(k, z); },
      [&](int k) { return p.threshold(k - 1); });
}

detail::Tape inpaint_tape(const Signal& y, const Mask& M, const InpaintParams& p,
                          std::optional<int> layers, Record record) {
  check_depth_vectors(p.theta, &p.gamma, "inpaint");
  require(p.W1.rows() == p.W2.rows() && p.W1.cols() == p.W2.cols(), "inpaint: W1 and W2 shapes differ");
  const int K = detail::resolve_layers(layers, p.depth(), "inpaint");
  const detail::InpaintLayers prepared(y, M, p);
  return run_ada(prepared, p.theta, K, p.momentum, record);
}

} // namespace

// ---------------------------------------------------------------- forwards

SparseCode ada_lista_forward(const Signal& y, const Dictionary& D, const AdaListaParams& p,
                             std::optional<int> layers) {
  return std::move(ada_tape(y, D, p, layers, false, Record::Final).x.back());
}

SolverTrace ada_lista_forward_trace(const Signal& y, const Dictionary& D, const AdaListaParams& p,
                                    std::optional<int> layers) {
  return to_trace(ada_tape(y, D, p, layers, false, Record::Codes));
}

SparseCode ada_lfista_forward(const Signal& y, const Dictionary& D, const AdaListaParams& p,
                              std::optional<int> layers) {
  return std::move(ada_tape(y, D, p, layers, true, Record::Final).x.back());
}

SolverTrace ada_lfista_forward_trace(const Signal& y, const Dictionary& D, const AdaListaParams& p,
                                     std::optional<int> layers) {
  return to_trace(ada_tape(y, D, p, layers, true, Record::Codes));
}

SparseCode ada_lista_single_forward(const Signal& y, const Dictionary& D, const SingleMatrixParams& p,
                                    std::optional<int> layers) {
  return std::move(single_tape(y, D, p, layers, Record::Final).x.back());
}

SolverTrace ada_lista_single_forward_trace(const Signal& y, const Dictionary& D,
                                           const SingleMatrixParams& p, std::optional<int> layers) {
  return to_trace(single_tape(y, D, p, layers, Record::Codes));
}

SparseCode lista_forward(const Signal& y, const ListaParams& p, std::optional<int> layers) {
  return std::move(lista_tape(y, p, layers, Record::Final).x.back());
}

SolverTrace lista_forward_trace(const Signal& y, const ListaParams& p, std::optional<int> layers) {
  return to_trace(lista_tape(y, p, layers, Record::Codes));
}

SparseCode inpaint_forward(const Signal& y, const Mask& M, const InpaintParams& p,
                           std::optional<int> layers) {
  return std::move(inpaint_tape(y, M, p, layers, Record::Final).x.back());
}

SolverTrace inpaint_forward_trace(const Signal& y, const Mask& M, const InpaintParams& p,
                                  std::optional<int> layers) {
  return to_trace(inpaint_tape(y, M, p, layers, Record::Codes));
}

// ------------------------------------------------------------------- model

std::string_view to_string(Variant v) {
  switch (v) {
  case Variant::AdaLista: return "ada_lista";
  case Variant::AdaLfista: return "ada_lfista";
  case Variant::Single: return "single";
  case Variant::Lista: return "lista";
  case Variant::Inpaint: return "inpaint";
  }
  return "unknown";
}

Variant variant_from_string(std::string_view name) {
  for (Variant v : {Variant::AdaLista, Variant::AdaLfista, Variant::Single, Variant::Lista, Variant::Inpaint})
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

int Model::depth() const {
  return std::visit([](const auto& p) { return p.depth(); }, params);
}

void validate(const Model& model) {
  const bool ok = std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AdaListaParams>) {
          return model.variant == Variant::AdaLista || model.variant == Variant::AdaLfista;
        } else if constexpr (std::is_same_v<T, SingleMatrixParams>) {
          return model.variant == Variant::Single;
        } else if constexpr (std::is_same_v<T, ListaParams>) {
          return model.variant == Variant::Lista;
        } else {
          return model.variant == Variant::Inpaint;
        }
      },
      model.params);
  if (!ok) throw std::invalid_argument("model: parameter set does not match variant " +
                                       std::string(to_string(model.variant)));
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AdaListaParams>) {
          check_depth_vectors(p.theta, &p.gamma, "ada_lista");
          require(p.W1.rows() == p.W1.cols() && p.W2.rows() == p.W2.cols() && p.W1.rows() == p.W2.rows(),
                  "ada_lista: W1 and W2 must be square n x n");
        } else if constexpr (std::is_same_v<T, SingleMatrixParams>) {
          check_depth_vectors(p.theta, nullptr, "single");
          require(p.W.rows() == p.W.cols(), "single: W must be square");
        } else if constexpr (std::is_same_v<T, ListaParams>) {
          require(p.layers >= 1, "lista: depth must be >= 1");
          require(p.theta.size() == 1 || p.theta.size() == p.layers,
                  "lista: theta must be shared or one per layer");
          require(p.W2.rows() == p.W2.cols() && p.W1.rows() == p.W2.rows(), "lista: W1 is m x n, W2 is m x m");
        } else {
          check_depth_vectors(p.theta, &p.gamma, "inpaint");
          require(p.W1.rows() == p.W2.rows() && p.W1.cols() == p.W2.cols(), "inpaint: W1 and W2 shapes differ");
        }
      },
      model.params);
}

SparseCode forward(const Model& model, const Signal& y, const ModelInput& in, std::optional<int> layers) {
  auto need_dict = [&]() -> const Dictionary& {
    if (!in.dictionary) throw std::invalid_argument("forward: variant requires a dictionary");
    return *in.dictionary;
  };
  switch (model.variant) {
  case Variant::AdaLista:
    return ada_lista_forward(y, need_dict(), std::get<AdaListaParams>(model.params), layers);
  case Variant::AdaLfista:
    return ada_lfista_forward(y, need_dict(), std::get<AdaListaParams>(model.params), layers);
  case Variant::Single:
    return ada_lista_single_forward(y, need_dict(), std::get<SingleMatrixParams>(model.params), layers);
  case Variant::Lista:
    return lista_forward(y, std::get<ListaParams>(model.params), layers);
  case Variant::Inpaint:
    if (!in.mask) throw std::invalid_argument("forward: inpaint variant requires a mask");
    return inpaint_forward(y, *in.mask, std::get<InpaintParams>(model.params), layers);
  }
  throw std::invalid_argument("forward: unknown variant");
}

namespace {

template <class M>
auto span_of(M& m) {
  using Elem = std::remove_pointer_t<decltype(m.data())>;
  return std::span<Elem>(m.data(), static_cast<std::size_t>(m.size()));
}

template <class ModelT>
auto collect(ModelT& model) {
  using Elem = std::conditional_t<std::is_const_v<ModelT>, const double, double>;
  std::vector<std::span<Elem>> out;
  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SingleMatrixParams>) {
          out.push_back(span_of(p.W));
          out.push_back(span_of(p.theta));
        } else if constexpr (std::is_same_v<T, ListaParams>) {
          out.push_back(span_of(p.W1));
          out.push_back(span_of(p.W2));
          out.push_back(span_of(p.theta));
        } else {
          out.push_back(span_of(p.W1));
          out.push_back(span_of(p.W2));
          out.push_back(span_of(p.theta));
          out.push_back(span_of(p.gamma));
        }
      },
      model.params);
  return out;
}

} // namespace

std::vector<std::span<double>> tensors(Model& model) { return collect(model); }
std::vector<std::span<const double>> tensors(const Model& model) { return collect(model); }

std::vector<std::string> tensor_names(const Model& model) {
  switch (model.variant) {
  case Variant::Single: return {"W", "theta"};
  case Variant::Lista: return {"W1", "W2", "theta"};
  default: return {"W1", "W2", "theta", "gamma"};
  }
}

std::size_t threshold_tensor(const Model& model) { return model.variant == Variant::Single ? 1 : 2; }

Model zeros_like(const Model& model) {
  Model out = model;
  for (auto t : tensors(out)) std::fill(t.begin(), t.end(), 0.0);
  return out;
}

// -------------------------------------------------------------------- JSON

namespace {

std::vector<double> to_list(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_list(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw std::invalid_argument(std::string("parameters: missing array '") + key + "'");
  const auto values = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Matrix matrix_field(const Json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("parameters: missing matrix '") + key + "'");
  return matrix_from_json(j.at(key));
}

} // namespace

Json to_json(const Model& model) {
  Json j;
  j["variant"] = std::string(to_string(model.variant));
  j["K"] = model.depth();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SingleMatrixParams>) {
          j["W"] = to_json(p.W);
          j["theta"] = to_list(p.theta);
        } else if constexpr (std::is_same_v<T, ListaParams>) {
          j["W1"] = to_json(p.W1);
          j["W2"] = to_json(p.W2);
          j["theta"] = to_list(p.theta);
        } else {
          j["W1"] = to_json(p.W1);
          j["W2"] = to_json(p.W2);
          j["theta"] = to_list(p.theta);
          j["gamma"] = to_list(p.gamma);
          if constexpr (std::is_same_v<T, InpaintParams>) j["momentum"] = p.momentum;
        }
      },
      model.params);
  return j;
}

Model model_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("variant")) throw std::invalid_argument("parameters: missing 'variant'");
  Model model;
  model.variant = variant_from_string(j.at("variant").get<std::string>());
  const int K = j.contains("K") ? j.at("K").get<int>() : -1;
  switch (model.variant) {
  case Variant::AdaLista:
  case Variant::AdaLfista:
    model.params = AdaListaParams{matrix_field(j, "W1"), matrix_field(j, "W2"), from_list(j, "theta"),
                                  from_list(j, "gamma")};
    break;
  case Variant::Single:
    model.params = SingleMatrixParams{matrix_field(j, "W"), from_list(j, "theta")};
    break;
  case Variant::Lista: {
    ListaParams p{matrix_field(j, "W1"), matrix_field(j, "W2"), from_list(j, "theta"), 0};
    p.layers = K >= 0 ? K : static_cast<int>(p.theta.size());
    model.params = std::move(p);
    break;
  }
  case Variant::Inpaint:
    model.params = InpaintParams{matrix_field(j, "W1"), matrix_field(j, "W2"), from_list(j, "theta"),
                                 from_list(j, "gamma"), j.value("momentum", true)};
    break;
  }
  validate(model);
  if (K >= 0 && K != model.depth()) {
    std::ostringstream os;
    os << "parameters: K = " << K << " but thresholds define depth " << model.depth();
    throw std::invalid_argument(os.str());
  }
  return model;
}

// ------------------------------------------------------------ initializers

AdaListaParams ada_lista_identity_init(Index n, int depth) {
  require(depth >= 1, "init: depth must be >= 1");
  return {Matrix::Identity(n, n), Matrix::Identity(n, n), Vector::Ones(depth), Vector::Ones(depth)};
}

AdaListaParams ada_lista_ista_init(Index n, int depth, double lipschitz, double lambda) {
  require(depth >= 1, "init: depth must be >= 1");
  require(lipschitz > 0.0, "init: Lipschitz constant must be positive");
  return {Matrix::Identity(n, n), Matrix::Identity(n, n), Vector::Constant(depth, lambda / lipschitz),
          Vector::Constant(depth, 1.0 / lipschitz)};
}

SingleMatrixParams single_identity_init(Index n, int depth, double theta) {
  require(depth >= 1, "init: depth must be >= 1");
  return {Matrix::Identity(n, n), Vector::Constant(depth, theta)};
}

ListaParams lista_step_init(const Dictionary& D, int depth, double lambda, double step) {
  require(depth >= 1, "init: depth must be >= 1");
  require(step > 0.0, "init: step must be positive");
  const Matrix& A = D.matrix();
  ListaParams p;
  p.W1 = step * A.transpose();
  p.W2 = Matrix::Identity(A.cols(), A.cols()) - step * (A.transpose() * A);
  p.theta = Vector::Constant(depth, lambda * step);
  p.layers = depth;
  return p;
}

ListaParams lista_ista_init(const Dictionary& D, int depth, double lambda) {
  const double L = spectral_norm_sq(D);
  if (!(L > 0.0)) throw NumericError("lista init: zero dictionary");
  return lista_step_init(D, depth, lambda, 1.0 / L);
}

InpaintParams inpaint_dictionary_init(const Dictionary& D, int depth, double lambda, bool momentum) {
  require(depth >= 1, "init: depth must be >= 1");
  const double L = spectral_norm_sq(D);
  if (!(L > 0.0)) throw NumericError("inpaint init: zero dictionary");
  return {D.matrix(), D.matrix(), Vector::Constant(depth, lambda / L), Vector::Constant(depth, 1.0 / L),
          momentum};
}

// -------------------------------------------------------------------- mask

Mask::Mask(Vector observed) : observed_(std::move(observed)) {
  for (Index i = 0; i < observed_.size(); ++i) {
    if (observed_[i] != 0.0 && observed_[i] != 1.0) throw std::invalid_argument("mask entries must be 0 or 1");
    if (observed_[i] == 0.0) ++missing_;
  }
}

Vector Mask::apply(const Vector& v) const {
  require_same_size(v.size(), observed_.size(), "mask apply");
  return v.cwiseProduct(observed_);
}

Matrix Mask::apply_rows(const Matrix& X) const {
  require_same_size(X.rows(), observed_.size(), "mask apply_rows");
  return observed_.asDiagonal() * X;
}

} // namespace adalista
