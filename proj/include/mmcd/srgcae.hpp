// Copyright 2026 The mmcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mmcd/graphs.hpp"
#include "mmcd/matrix.hpp"

namespace mmcd {

enum class Objective : std::uint8_t { Vertex = 0, Edge = 1 };
enum class Activation : std::uint8_t { Linear = 0, Relu = 1, Sigmoid = 2 };
enum class ImageSide { X, Y };

inline constexpr std::array<std::size_t, 2> kEncoderWidths = {16, 32};
inline constexpr std::size_t kFeatureWidth = kEncoderWidths.back();

// One graph-convolution layer without bias: act(P * H * W).
struct GcLayer {
  Matrix weight;
  Activation activation = Activation::Linear;
};

// Graph convolutional autoencoder shared by both images. Each image enters
// through its own linear projection to the common width c_h, then runs the
// shared two-layer encoder. The vertex head is one more GC layer back to c_h;
// the edge head is sigmoid(F F^T) and has no weights. With tied projections
// (same modality and channel count on both sides) image Y also enters
// through input_proj_x, and input_proj_y is never used.
struct SrGcaeModel {
  Objective objective = Objective::Edge;
  bool tied_projections = false;
  std::uint64_t rng_seed = 0;
  std::size_t c_x = 0;
  std::size_t c_y = 0;
  std::size_t c_h = 0;
  Matrix input_proj_x;  // c_x x c_h
  Matrix input_proj_y;  // c_y x c_h
  std::vector<GcLayer> encoder;
  std::optional<GcLayer> vertex_decoder;

  // Trainable tensors in a fixed order: proj_x, proj_y, encoder..., decoder.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  bool operator==(const SrGcaeModel&) const;
};

// Glorot-uniform initialization, deterministic in the seed.
SrGcaeModel init_model(std::size_t c_x, std::size_t c_y, Objective objective, std::uint64_t seed,
                       bool tied_projections = false);

double glorot_bound(std::size_t fan_in, std::size_t fan_out);

// V * P_side, the modality projection of the vertex features.
Matrix project_input(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side);

Matrix encode(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side);
Matrix decode_vertex(const SrGcaeModel& model, const Matrix& features, const StructuralGraph& g);
Matrix decode_edge(const Matrix& features);

// Mean squared error over all N*C_h entries.
double loss_vertex(const Matrix& reconstruction, const Matrix& target);
// Mean squared error over all N*N adjacency entries.
double loss_edge(const Matrix& reconstruction, const Matrix& adjacency);

// Loss of the model's own objective on one graph.
double objective_loss(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side);

struct LossAndGradients {
  double loss = 0.0;
  std::vector<Matrix> grads;  // aligned with SrGcaeModel::parameters()
  std::vector<bool> touched;  // false for projections without a forward path
};

// Analytic gradients of objective_loss with respect to every parameter.
LossAndGradients gradients(const SrGcaeModel& model, const StructuralGraph& g, ImageSide side);

struct AdamConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

AdamState make_adam_state(const SrGcaeModel& model, const AdamConfig& config = {});

// Bias-corrected Adam step followed by decoupled weight decay
// (theta -= lr * wd * theta). Parameters whose `touched` flag is false are
// left alone, moments included. An empty `touched` means all parameters.
void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix> grads,
               const std::vector<bool>& touched = {});

struct TrainReport {
  std::vector<double> epoch_losses;  // mean per-graph loss of each epoch
  std::size_t epochs() const noexcept { return epoch_losses.size(); }
  double final_loss() const { return epoch_losses.empty() ? 0.0 : epoch_losses.back(); }
};

struct TrainResult {
  SrGcaeModel model;
  TrainReport report;
};

// One epoch is a pass over the seeded shuffle of both images' graphs with one
// optimizer step per graph.
TrainResult train(SrGcaeModel model, std::span<const StructuralGraph> graphs_x,
                  std::span<const StructuralGraph> graphs_y, std::size_t epochs,
                  const AdamConfig& adam = {});

// "MMRGCAE1", objective u8, tied u8, seed u64, c_x/c_y/c_h u32, tensor count u32,
// (rows u32, cols u32, activation u8) per tensor, then LE f64 payloads.
void save_model(const SrGcaeModel& model, const std::filesystem::path& path);
SrGcaeModel load_model(const std::filesystem::path& path);

}  // namespace mmcd
