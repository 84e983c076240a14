#include "jumps/losses/losses.hpp"

#include <cmath>

#include "jumps/error.hpp"

namespace jumps {

void validate(const LossWeights& w) {
  for (double v : {w.lambda_gp, w.lambda_p, w.lambda_s, w.lambda_z, w.lambda_m, w.gamma_p, w.gamma_s, w.gamma_d}) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("loss weights must be finite and >= 0");
  }
}

nlohmann::json to_json(const LossWeights& w) {
  return {{"lambda_gp", w.lambda_gp}, {"lambda_p", w.lambda_p}, {"lambda_s", w.lambda_s},
          {"lambda_z", w.lambda_z},   {"lambda_m", w.lambda_m}, {"gamma_p", w.gamma_p},
          {"gamma_s", w.gamma_s},     {"gamma_d", w.gamma_d}};
}

LossWeights loss_weights_from_json(const nlohmann::json& j, LossWeights w) {
  try {
    w.lambda_gp = j.value("lambda_gp", w.lambda_gp);
    w.lambda_p = j.value("lambda_p", w.lambda_p);
    w.lambda_s = j.value("lambda_s", w.lambda_s);
    w.lambda_z = j.value("lambda_z", w.lambda_z);
    w.lambda_m = j.value("lambda_m", w.lambda_m);
    w.gamma_p = j.value("gamma_p", w.gamma_p);
    w.gamma_s = j.value("gamma_s", w.gamma_s);
    w.gamma_d = j.value("gamma_d", w.gamma_d);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("loss weights: ") + e.what());
  }
  validate(w);
  return w;
}

namespace {

void check_pair(const torch::Tensor& x, const torch::Tensor& y) {
  if (x.dim() != 4 || x.size(3) != 2 || x.sizes() != y.sizes()) {
    throw DataError("expected matching N x F x J x 2 joint tensors");
  }
}

torch::Tensor full_mask(const torch::Tensor& x, const torch::Tensor& mask) {
  if (!mask.defined()) return torch::ones({x.size(0), x.size(1), x.size(2)}, x.options());
  return mask.to(x.dtype()).expand({x.size(0), x.size(1), x.size(2)});
}

torch::Tensor masked_mean(const torch::Tensor& values, const torch::Tensor& mask, const char* what) {
  const auto count = mask.sum({1, 2});
  if (count.min().item<double>() <= 0.0) throw DataError(std::string(what) + " over an empty mask");
  return (values * mask).sum({1, 2}) / count;
}

}  // namespace

torch::Tensor mpjpe(const torch::Tensor& x, const torch::Tensor& y, const torch::Tensor& mask) {
  check_pair(x, y);
  const auto d = torch::linalg_vector_norm(x - y, 2, {-1});
  return masked_mean(d, full_mask(x, mask), "mpjpe");
}

torch::Tensor mpjve(const torch::Tensor& x, const torch::Tensor& y, const torch::Tensor& mask) {
  check_pair(x, y);
  const int64_t f = x.size(1);
  if (f < 2) throw DataError("mpjve needs at least 2 frames");
  const auto vx = x.narrow(1, 1, f - 1) - x.narrow(1, 0, f - 1);
  const auto vy = y.narrow(1, 1, f - 1) - y.narrow(1, 0, f - 1);
  const auto m = full_mask(x, mask);
  const auto pair = m.narrow(1, 1, f - 1) * m.narrow(1, 0, f - 1);
  return masked_mean(torch::linalg_vector_norm(vx - vy, 2, {-1}), pair, "mpjve");
}

torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& real8, const torch::Tensor& fake8,
                               const torch::Tensor& u) {
  if (real8.sizes() != fake8.sizes() || u.dim() != 1 || u.size(0) != real8.size(0)) {
    throw DataError("gradient penalty: mismatched batch shapes");
  }
  const auto w = u.to(real8.dtype()).view({-1, 1, 1, 1});
  auto mixed = w * real8 + (1 - w) * fake8;
  if (!mixed.requires_grad()) mixed = mixed.detach().requires_grad_(true);
  const auto score = critic(mixed);
  torch::Tensor grad;
  if (score.requires_grad()) {
    grad = torch::autograd::grad({score.sum()}, {mixed}, {}, /*retain_graph=*/true, /*create_graph=*/true,
                                 /*allow_unused=*/true)[0];
  }
  if (!grad.defined()) grad = torch::zeros_like(mixed);
  const auto norm = torch::linalg_vector_norm(grad.flatten(1), 2, {1});
  return (norm - 1).pow(2).mean();
}

torch::Tensor critic_loss(const Critic& critic, const torch::Tensor& real8, const torch::Tensor& fake8,
                          double lambda_gp, const torch::Tensor& u) {
  auto loss = critic(fake8).mean() - critic(real8).mean();
  if (lambda_gp > 0.0) loss = loss + lambda_gp * gradient_penalty(critic, real8, fake8, u);
  return loss;
}

AdversarialLosses adversarial_losses(const Critic& critic, const GeneratorFn& generator, const torch::Tensor& real4,
                                     const torch::Tensor& z, double lambda_gp, const torch::Tensor& u) {
  if (real4.size(0) == 0 || z.size(0) == 0) throw DataError("adversarial losses need nonempty batches");
  const auto fake8 = with_velocities(generator(z));
  const auto real8 = with_velocities(real4);
  return {-critic(fake8).mean(), critic_loss(critic, real8, fake8, lambda_gp, u)};
}

torch::Tensor reconstruction_loss(const torch::Tensor& x, const torch::Tensor& x_hat, const LossWeights& w) {
  auto loss = w.lambda_p * mpjpe(x_hat, x);
  if (w.lambda_s != 0.0) loss = loss + w.lambda_s * mpjve(x_hat, x);
  return loss.mean();
}

torch::Tensor backward_reconstruction_loss(const torch::Tensor& z, const torch::Tensor& z_hat, double lambda_z) {
  if (z.sizes() != z_hat.sizes()) throw DataError("latent codes differ in shape");
  return lambda_z * (z_hat - z).pow(2).mean();
}

torch::Tensor mixed_loss(const Critic& critic, const torch::Tensor& x_hat8, double lambda_m) {
  return -lambda_m * critic(x_hat8).mean();
}

InpaintingTerms inpainting_loss(const torch::Tensor& x, const torch::Tensor& mask, const torch::Tensor& x_hat,
                                const Critic& critic, const GridLayout& layout, const LossWeights& w) {
  const auto target = x.expand_as(x_hat);
  InpaintingTerms t;
  t.contextual = w.gamma_p * mpjpe(x_hat, target, mask);
  if (w.gamma_s != 0.0) t.contextual = t.contextual + w.gamma_s * mpjve(x_hat, target, mask);
  t.prior = w.gamma_d != 0.0 ? critic(layout.critic_input(layout.grid_from_joints(x_hat)))
                             : torch::zeros({x_hat.size(0)}, x_hat.options());
  t.total = t.contextual - w.gamma_d * t.prior;
  return t;
}

}  // namespace jumps
