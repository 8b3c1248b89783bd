#include "supercorrect/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace supercorrect {

namespace {

double softplus(double t) {
  if (t > 0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double dpo_margin(const LogProbProvider& policy, const LogProbProvider& reference,
                  std::span<const int> x, std::span<const int> y_plus,
                  std::span<const int> y_minus, double beta) {
  if (beta <= 0) throw std::invalid_argument("beta must be positive");
  double delta_plus = sequence_logprob(policy, x, y_plus) - sequence_logprob(reference, x, y_plus);
  double delta_minus =
      sequence_logprob(policy, x, y_minus) - sequence_logprob(reference, x, y_minus);
  return beta * (delta_plus - delta_minus);
}

std::vector<int> concat(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

double log_sigmoid(double z) { return -softplus(-z); }

double reward_pair_loss(double r_plus, double r_minus) {
  if (!std::isfinite(r_plus) || !std::isfinite(r_minus))
    throw std::invalid_argument("reward_pair_loss requires finite rewards");
  return -log_sigmoid(r_plus - r_minus);
}

double sft_loss(const LogProbProvider& model, std::span<const int> prompt,
                std::span<const int> response) {
  return -sequence_logprob(model, prompt, response);
}

double dpo_loss(const LogProbProvider& policy, const LogProbProvider& reference,
                std::span<const int> x, std::span<const int> y_plus, std::span<const int> y_minus,
                double beta) {
  return -log_sigmoid(dpo_margin(policy, reference, x, y_plus, y_minus, beta));
}

double cross_dpo_loss(const LogProbProvider& policy, const LogProbProvider& reference,
                      std::span<const int> x, std::span<const int> prefix_steps,
                      std::span<const int> chosen, std::span<const int> rejected, double beta) {
  if (prefix_steps.empty()) return dpo_loss(policy, reference, x, chosen, rejected, beta);
  std::vector<int> context = concat(x, prefix_steps);
  return dpo_loss(policy, reference, context, chosen, rejected, beta);
}

double implied_preference_probability(const LogProbProvider& policy,
                                      const LogProbProvider& reference, std::span<const int> x,
                                      std::span<const int> y_plus, std::span<const int> y_minus,
                                      double beta) {
  return sigmoid(dpo_margin(policy, reference, x, y_plus, y_minus, beta));
}

double sft_loss_grad(const ToyLM& model, std::span<const int> prompt,
                     std::span<const int> response, std::span<double> grad) {
  // d(-log p)/d theta = -d(log p)/d theta
  model.accumulate_score_grad(prompt, response, -1.0, grad);
  return sft_loss(model, prompt, response);
}

double dpo_loss_grad(const ToyLM& policy, const LogProbProvider& reference,
                     std::span<const int> x, std::span<const int> y_plus,
                     std::span<const int> y_minus, double beta, std::span<double> grad) {
  double z = dpo_margin(policy, reference, x, y_plus, y_minus, beta);
  // d(-log sigma(z))/dz = -sigma(-z); reference terms carry no policy grad.
  double coeff = -sigmoid(-z) * beta;
  policy.accumulate_score_grad(x, y_plus, coeff, grad);
  policy.accumulate_score_grad(x, y_minus, -coeff, grad);
  return -log_sigmoid(z);
}

double cross_dpo_loss_grad(const ToyLM& policy, const LogProbProvider& reference,
                           std::span<const int> x, std::span<const int> prefix_steps,
                           std::span<const int> chosen, std::span<const int> rejected, double beta,
                           std::span<double> grad) {
  if (prefix_steps.empty()) return dpo_loss_grad(policy, reference, x, chosen, rejected, beta, grad);
  std::vector<int> context = concat(x, prefix_steps);
  return dpo_loss_grad(policy, reference, context, chosen, rejected, beta, grad);
}

}  // namespace supercorrect
