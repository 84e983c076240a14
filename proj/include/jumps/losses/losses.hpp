#pragma once

#include <functional>

#include <json.hpp>
#include <torch/torch.h>

#include "jumps/net/grid_ops.hpp"

namespace jumps {

struct LossWeights {
  double lambda_gp = 10.0;
  double lambda_p = 200.0;
  double lambda_s = 100.0;
  double lambda_z = 2.0;
  double lambda_m = 1.0;
  double gamma_p = 10.0;
  double gamma_s = 5.0;
  double gamma_d = 15.0;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

void validate(const LossWeights& w);
nlohmann::json to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const nlohmann::json& j, LossWeights base = {});

// Maps critic inputs N x 8 x H x F to scores N.
using Critic = std::function<torch::Tensor(const torch::Tensor&)>;
// Maps latent codes N x Z to grids N x 4 x H x F.
using GeneratorFn = std::function<torch::Tensor(const torch::Tensor&)>;

// Per-sample position/velocity errors of joint tensors N x F x J x 2. The mask
// (F x J or N x F x J, 0/1) selects pairs; a velocity pair needs the joint at
// f and f - 1. Throws DataError when a sample has nothing to score.
torch::Tensor mpjpe(const torch::Tensor& x, const torch::Tensor& y, const torch::Tensor& mask = {});
torch::Tensor mpjve(const torch::Tensor& x, const torch::Tensor& y, const torch::Tensor& mask = {});

// mean((||grad D(x~)|| - 1)^2), x~ = u x + (1 - u) fake with one u per sample.
// Differentiable with respect to the critic's parameters.
torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& real8, const torch::Tensor& fake8,
                               const torch::Tensor& u);

// L_D on critic inputs.
torch::Tensor critic_loss(const Critic& critic, const torch::Tensor& real8, const torch::Tensor& fake8,
                          double lambda_gp, const torch::Tensor& u);

struct AdversarialLosses {
  torch::Tensor generator;  // L_G
  torch::Tensor critic;     // L_D
};

// Velocities are appended to the 4-channel real batch and to G(z).
AdversarialLosses adversarial_losses(const Critic& critic, const GeneratorFn& generator, const torch::Tensor& real4,
                                     const torch::Tensor& z, double lambda_gp, const torch::Tensor& u);

// lambda_p * MPJPE + lambda_s * MPJVE averaged over the batch.
torch::Tensor reconstruction_loss(const torch::Tensor& x, const torch::Tensor& x_hat, const LossWeights& w);

// lambda_z * mean squared error.
torch::Tensor backward_reconstruction_loss(const torch::Tensor& z, const torch::Tensor& z_hat, double lambda_z);

// -lambda_m * mean D(x_hat), x_hat given as critic input.
torch::Tensor mixed_loss(const Critic& critic, const torch::Tensor& x_hat8, double lambda_m);

struct InpaintingTerms {
  torch::Tensor contextual;  // N: gamma_p * MPJPE + gamma_s * MPJVE on masked joints
  torch::Tensor prior;       // N: critic score
  torch::Tensor total;       // N: contextual - gamma_d * prior
};

// x, x_hat: joint tensors N x F x J x 2 (x may be 1 x F x J x 2); the critic
// sees the whole of x_hat.
InpaintingTerms inpainting_loss(const torch::Tensor& x, const torch::Tensor& mask, const torch::Tensor& x_hat,
                                const Critic& critic, const GridLayout& layout, const LossWeights& w);

}  // namespace jumps
