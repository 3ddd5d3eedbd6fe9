// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmcd/srgcae.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "mmcd/error.hpp"
#include "mmcd/simd.hpp"

namespace mmcd {
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void apply(Activation act, Matrix& m) {
  switch (act) {
    case Activation::Linear: break;
    case Activation::Relu:
      for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Sigmoid:
      for (double& v : m.values()) v = sigmoid(v);
      break;
  }
}

Matrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = glorot_bound(rows, cols);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

std::size_t projection_index(const SrGcaeModel& model, ImageSide side) {
  return side == ImageSide::X || model.tied_projections ? 0 : 1;
}

const Matrix& projection(const SrGcaeModel& model, ImageSide side) {
  return projection_index(model, side) == 0 ? model.input_proj_x : model.input_proj_y;
}

void check_side(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side) {
  const Matrix& p = projection(model, side);
  if (g.vertex_features.cols() != p.rows()) {
    fail(ErrorCode::ShapeMismatch, "graph has " + std::to_string(g.vertex_features.cols()) +
                                       " channels but the projection expects " + std::to_string(p.rows()));
  }
  if (g.adjacency.rows() != g.n_vertices() || g.adjacency.cols() != g.n_vertices()) {
    fail(ErrorCode::ShapeMismatch, "adjacency is not N x N");
  }
}

void add_into(Matrix& dst, const Matrix& src) {
  simd::active().axpy(1.0, src.data(), dst.data(), dst.size());
}

void scale(Matrix& m, double s) {
  for (double& v : m.values()) v *= s;
}

// Intermediate products kept for the backward pass.
struct Forward {
  Matrix prop;   // P
  Matrix x0;     // V * P_side
  Matrix px0;    // P * x0
  Matrix z1;     // P * x0 * W1 (pre-activation)
  Matrix h1;     // relu(z1)
  Matrix ph1;    // P * h1
  Matrix f;      // P * h1 * W2
};

Forward forward(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side) {
  check_side(model, g, side);
  Forward fw;
  fw.prop = propagation_matrix(g);
  fw.x0 = matmul(g.vertex_features, projection(model, side));
  fw.px0 = matmul(fw.prop, fw.x0);
  fw.z1 = matmul(fw.px0, model.encoder[0].weight);
  fw.h1 = fw.z1;
  apply(model.encoder[0].activation, fw.h1);
  fw.ph1 = matmul(fw.prop, fw.h1);
  fw.f = matmul(fw.ph1, model.encoder[1].weight);
  apply(model.encoder[1].activation, fw.f);
  return fw;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr char kModelMagic[8] = {'M', 'M', 'R', 'G', 'C', 'A', 'E', '1'};

}  // namespace

std::vector<Matrix*> SrGcaeModel::parameters() {
  std::vector<Matrix*> out{&input_proj_x, &input_proj_y};
  for (GcLayer& l : encoder) out.push_back(&l.weight);
  if (vertex_decoder) out.push_back(&vertex_decoder->weight);
  return out;
}

std::vector<const Matrix*> SrGcaeModel::parameters() const {
  std::vector<const Matrix*> out{&input_proj_x, &input_proj_y};
  for (const GcLayer& l : encoder) out.push_back(&l.weight);
  if (vertex_decoder) out.push_back(&vertex_decoder->weight);
  return out;
}

bool SrGcaeModel::operator==(const SrGcaeModel& o) const {
  if (objective != o.objective || tied_projections != o.tied_projections || rng_seed != o.rng_seed || c_x != o.c_x || c_y != o.c_y ||
      c_h != o.c_h || encoder.size() != o.encoder.size() ||
      vertex_decoder.has_value() != o.vertex_decoder.has_value()) {
    return false;
  }
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    if (encoder[i].activation != o.encoder[i].activation) return false;
  }
  const auto a = parameters();
  const auto b = o.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols()) return false;
    if (std::memcmp(a[i]->data(), b[i]->data(), a[i]->size() * sizeof(double)) != 0) return false;
  }
  return true;
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

SrGcaeModel init_model(std::size_t c_x, std::size_t c_y, Objective objective, std::uint64_t seed,
                       bool tied_projections) {
  if (c_x == 0 || c_y == 0) fail(ErrorCode::InvalidConfig, "channel counts must be >= 1");
  if (tied_projections && c_x != c_y) fail(ErrorCode::InvalidConfig, "tied projections need c_x == c_y");
  SrGcaeModel m;
  m.objective = objective;
  m.tied_projections = tied_projections;
  m.rng_seed = seed;
  m.c_x = c_x;
  m.c_y = c_y;
  m.c_h = std::max(c_x, c_y);
  std::mt19937_64 rng(seed);
  m.input_proj_x = glorot(c_x, m.c_h, rng);
  m.input_proj_y = glorot(c_y, m.c_h, rng);
  std::size_t in = m.c_h;
  for (std::size_t i = 0; i < kEncoderWidths.size(); ++i) {
    const bool last = i + 1 == kEncoderWidths.size();
    m.encoder.push_back({glorot(in, kEncoderWidths[i], rng), last ? Activation::Linear : Activation::Relu});
    in = kEncoderWidths[i];
  }
  if (objective == Objective::Vertex) m.vertex_decoder = GcLayer{glorot(in, m.c_h, rng), Activation::Linear};
  return m;
}

Matrix project_input(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side) {
  check_side(model, g, side);
  return matmul(g.vertex_features, projection(model, side));
}

Matrix encode(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side) {
  return forward(model, g, side).f;
}

Matrix decode_vertex(const SrGcaeModel& model, const Matrix& features, const StructuralGraph& g) {
  if (model.objective != Objective::Vertex || !model.vertex_decoder) {
    fail(ErrorCode::WrongHead, "decode_vertex needs a vertex-objective model");
  }
  if (features.rows() != g.n_vertices()) fail(ErrorCode::ShapeMismatch, "feature rows != graph vertices");
  Matrix out = matmul(matmul(propagation_matrix(g), features), model.vertex_decoder->weight);
  apply(model.vertex_decoder->activation, out);
  return out;
}

Matrix decode_edge(const Matrix& features) {
  Matrix s = matmul_nt(features, features);
  // Mirror the upper triangle so the output is exactly symmetric.
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j) s(j, i) = s(i, j);
  apply(Activation::Sigmoid, s);
  return s;
}

double loss_vertex(const Matrix& reconstruction, const Matrix& target) {
  if (reconstruction.rows() != target.rows() || reconstruction.cols() != target.cols()) {
    fail(ErrorCode::ShapeMismatch, "vertex reconstruction shape differs from target");
  }
  if (target.empty()) return 0.0;
  return simd::active().squared_distance(reconstruction.data(), target.data(), target.size()) /
         static_cast<double>(target.size());
}

double loss_edge(const Matrix& reconstruction, const Matrix& adjacency) {
  if (reconstruction.rows() != adjacency.rows() || reconstruction.cols() != adjacency.cols()) {
    fail(ErrorCode::ShapeMismatch, "edge reconstruction shape differs from adjacency");
  }
  if (adjacency.empty()) return 0.0;
  return simd::active().squared_distance(reconstruction.data(), adjacency.data(), adjacency.size()) /
         static_cast<double>(adjacency.size());
}

double objective_loss(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side) {
  const Forward fw = forward(model, g, side);
  if (model.objective == Objective::Edge) return loss_edge(decode_edge(fw.f), g.adjacency);
  return loss_vertex(decode_vertex(model, fw.f, g), fw.x0);
}

LossAndGradients gradients(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side) {
  const Forward fw = forward(model, g, side);
  const auto params = model.parameters();
  LossAndGradients out;
  out.grads.reserve(params.size());
  for (const Matrix* p : params) out.grads.emplace_back(p->rows(), p->cols());
  const std::size_t proj = projection_index(model, side);
  out.touched.assign(params.size(), true);
  out.touched[1 - proj] = false;

  const GcLayer& l1 = model.encoder[0];
  const GcLayer& l2 = model.encoder[1];
  Matrix d_f;
  Matrix d_x0(fw.x0.rows(), fw.x0.cols());

  if (model.objective == Objective::Edge) {
    const Matrix a_hat = decode_edge(fw.f);
    out.loss = loss_edge(a_hat, g.adjacency);
    const double n2 = static_cast<double>(a_hat.size());
    // dL/dS for S = F F^T, symmetrized.
    Matrix d_s(a_hat.rows(), a_hat.cols());
    for (std::size_t i = 0; i < a_hat.size(); ++i) {
      const double ah = a_hat.data()[i];
      d_s.data()[i] = 2.0 * (ah - g.adjacency.data()[i]) / n2 * ah * (1.0 - ah);
    }
    Matrix sym(d_s.rows(), d_s.cols());
    for (std::size_t i = 0; i < d_s.rows(); ++i)
      for (std::size_t j = 0; j < d_s.cols(); ++j) sym(i, j) = d_s(i, j) + d_s(j, i);
    d_f = matmul(sym, fw.f);
  } else {
    const GcLayer& dec = *model.vertex_decoder;
    const Matrix pf = matmul(fw.prop, fw.f);
    const Matrix v_hat = matmul(pf, dec.weight);
    out.loss = loss_vertex(v_hat, fw.x0);
    Matrix d_v = v_hat;
    for (std::size_t i = 0; i < d_v.size(); ++i) {
      d_v.data()[i] = 2.0 * (v_hat.data()[i] - fw.x0.data()[i]) / static_cast<double>(d_v.size());
    }
    out.grads.back() = matmul_tn(pf, d_v);
    d_f = matmul(fw.prop, matmul_nt(d_v, dec.weight));
    // The reconstruction target x0 also depends on the projection.
    d_x0 = d_v;
    scale(d_x0, -1.0);
  }

  // Encoder layer 2 (linear).
  out.grads[3] = matmul_tn(fw.ph1, d_f);
  Matrix d_h1 = matmul(fw.prop, matmul_nt(d_f, l2.weight));
  // Encoder layer 1 (relu).
  if (l1.activation == Activation::Relu) {
    for (std::size_t i = 0; i < d_h1.size(); ++i) {
      if (!(fw.z1.data()[i] > 0.0)) d_h1.data()[i] = 0.0;
    }
  }
  out.grads[2] = matmul_tn(fw.px0, d_h1);
  add_into(d_x0, matmul(fw.prop, matmul_nt(d_h1, l1.weight)));
  out.grads[proj] = matmul_tn(g.vertex_features, d_x0);
  return out;
}

AdamState make_adam_state(const SrGcaeModel& model, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (const Matrix* p : model.parameters()) {
    s.first_moment.emplace_back(p->rows(), p->cols());
    s.second_moment.emplace_back(p->rows(), p->cols());
  }
  return s;
}

void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix> grads,
               const std::vector<bool>& touched) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    fail(ErrorCode::ShapeMismatch, "parameter, gradient and moment counts differ");
  }
  if (!touched.empty() && touched.size() != params.size()) {
    fail(ErrorCode::ShapeMismatch, "touched mask length differs from parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols() ||
        state.first_moment[i].size() != grads[i].size()) {
      fail(ErrorCode::ShapeMismatch, "gradient shape differs from its parameter");
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!touched.empty() && !touched[i]) continue;
    double* w = params[i]->data();
    const double* g = grads[i].data();
    double* m = state.first_moment[i].data();
    double* v = state.second_moment[i].data();
    for (std::size_t k = 0; k < grads[i].size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      w[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
      w[k] -= c.learning_rate * c.weight_decay * w[k];
    }
  }
}

TrainResult train(SrGcaeModel model, std::span<const StructuralGraph> graphs_x,
                  std::span<const StructuralGraph> graphs_y, std::size_t epochs, const AdamConfig& adam) {
  if (graphs_x.empty() && graphs_y.empty()) fail(ErrorCode::EmptyTrainingSet, "no graphs to train on");
  struct Item {
    const StructuralGraph* graph;
    ImageSide side;
  };
  std::vector<Item> items;
  items.reserve(graphs_x.size() + graphs_y.size());
  for (const auto& g : graphs_x) items.push_back({&g, ImageSide::X});
  for (const auto& g : graphs_y) items.push_back({&g, ImageSide::Y});

  TrainResult result{std::move(model), {}};
  AdamState state = make_adam_state(result.model, adam);
  std::mt19937_64 rng(result.model.rng_seed ^ 0x5eed5eed5eed5eedULL);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::shuffle(items.begin(), items.end(), rng);
    double total = 0.0;
    for (const Item& it : items) {
      LossAndGradients lg = gradients(result.model, *it.graph, it.side);
      total += lg.loss;
      auto params = result.model.parameters();
      adam_step(state, params, lg.grads, lg.touched);
    }
    result.report.epoch_losses.push_back(total / static_cast<double>(items.size()));
  }
  return result;
}

void save_model(const SrGcaeModel& model, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out(std::begin(kModelMagic), std::end(kModelMagic));
  const auto put = [&](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put(static_cast<std::uint8_t>(model.objective), 1);
  put(model.tied_projections ? 1 : 0, 1);
  put(model.rng_seed, 8);
  put(model.c_x, 4);
  put(model.c_y, 4);
  put(model.c_h, 4);
  const auto params = model.parameters();
  std::vector<Activation> acts{Activation::Linear, Activation::Linear};
  for (const GcLayer& l : model.encoder) acts.push_back(l.activation);
  if (model.vertex_decoder) acts.push_back(model.vertex_decoder->activation);
  put(params.size(), 4);
  for (std::size_t i = 0; i < params.size(); ++i) {
    put(params[i]->rows(), 4);
    put(params[i]->cols(), 4);
    put(static_cast<std::uint8_t>(acts[i]), 1);
  }
  for (const Matrix* p : params)
    for (double v : p->values()) put(std::bit_cast<std::uint64_t>(v), 8);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) fail(ErrorCode::IoFailure, "short write to " + path.string());
}

SrGcaeModel load_model(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  const auto get = [&](int n) {
    if (pos + static_cast<std::size_t>(n) > bytes.size()) fail(ErrorCode::MalformedHeader, "model file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += static_cast<std::size_t>(n);
    return v;
  };
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kModelMagic, 8) != 0) {
    fail(ErrorCode::MalformedHeader, "not an MMRGCAE1 checkpoint: " + path.string());
  }
  pos = 8;
  const auto objective = get(1);
  if (objective > 1) fail(ErrorCode::MalformedHeader, "unknown objective code");
  SrGcaeModel m;
  m.objective = static_cast<Objective>(objective);
  const auto tied = get(1);
  if (tied > 1) fail(ErrorCode::MalformedHeader, "bad tied-projection flag");
  m.tied_projections = tied == 1;
  m.rng_seed = get(8);
  m.c_x = get(4);
  m.c_y = get(4);
  m.c_h = get(4);
  const std::size_t count = get(4);
  const std::size_t expected = 2 + kEncoderWidths.size() + (m.objective == Objective::Vertex ? 1 : 0);
  if (count != expected) fail(ErrorCode::MalformedHeader, "unexpected tensor count in checkpoint");
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  std::vector<Activation> acts;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = get(4), c = get(4);
    const auto a = get(1);
    if (a > 2) fail(ErrorCode::MalformedHeader, "unknown activation code");
    shapes.emplace_back(r, c);
    acts.push_back(static_cast<Activation>(a));
  }
  std::vector<Matrix> tensors;
  for (const auto& [r, c] : shapes) {
    Matrix t(r, c);
    for (double& v : t.values()) v = std::bit_cast<double>(get(8));
    tensors.push_back(std::move(t));
  }
  if (pos != bytes.size()) fail(ErrorCode::DimensionMismatch, "trailing bytes in checkpoint");
  m.input_proj_x = std::move(tensors[0]);
  m.input_proj_y = std::move(tensors[1]);
  for (std::size_t i = 0; i < kEncoderWidths.size(); ++i) m.encoder.push_back({std::move(tensors[2 + i]), acts[2 + i]});
  if (m.objective == Objective::Vertex) m.vertex_decoder = GcLayer{std::move(tensors.back()), acts.back()};
  if (m.input_proj_x.rows() != m.c_x || m.input_proj_y.rows() != m.c_y || m.input_proj_x.cols() != m.c_h) {
    fail(ErrorCode::MalformedHeader, "projection shapes disagree with channel counts");
  }
  return m;
}

}  // namespace mmcd
