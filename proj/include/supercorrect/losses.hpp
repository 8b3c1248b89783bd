#pragma once

#include <span>
#include <vector>

#include "supercorrect/toylm.hpp"

namespace supercorrect {

// log sigma(z), computed as -softplus(-z) so large |z| stays finite.
double log_sigmoid(double z);

// Bradley-Terry pair loss -log sigma(r_plus - r_minus). Strictly decreasing
// in the reward gap. Throws on non-finite input.
double reward_pair_loss(double r_plus, double r_minus);

// Negative summed conditional log-likelihood of response given prompt; >= 0.
double sft_loss(const LogProbProvider& model, std::span<const int> prompt,
                std::span<const int> response);

// -log sigma(beta * [(log pi_theta(y+|x) - log pi_ref(y+|x))
//                  - (log pi_theta(y-|x) - log pi_ref(y-|x))])
double dpo_loss(const LogProbProvider& policy, const LogProbProvider& reference,
                std::span<const int> x, std::span<const int> y_plus, std::span<const int> y_minus,
                double beta);

// Same functional form as dpo_loss with conditioning context x followed by
// the verified prefix steps; operands are the paired correction annotations.
// With an empty prefix this is exactly dpo_loss, bit for bit.
double cross_dpo_loss(const LogProbProvider& policy, const LogProbProvider& reference,
                      std::span<const int> x, std::span<const int> prefix_steps,
                      std::span<const int> chosen, std::span<const int> rejected, double beta);

// sigma(beta * (delta_plus - delta_minus)): the model's probability of
// preferring chosen over rejected under the DPO parameterization.
double implied_preference_probability(const LogProbProvider& policy,
                                      const LogProbProvider& reference, std::span<const int> x,
                                      std::span<const int> y_plus, std::span<const int> y_minus,
                                      double beta);

// Analytic gradients with respect to the policy parameters, accumulated into
// grad (size = policy.param_count()). Each returns the loss value.
double sft_loss_grad(const ToyLM& model, std::span<const int> prompt,
                     std::span<const int> response, std::span<double> grad);
double dpo_loss_grad(const ToyLM& policy, const LogProbProvider& reference,
                     std::span<const int> x, std::span<const int> y_plus,
                     std::span<const int> y_minus, double beta, std::span<double> grad);
double cross_dpo_loss_grad(const ToyLM& policy, const LogProbProvider& reference,
                           std::span<const int> x, std::span<const int> prefix_steps,
                           std::span<const int> chosen, std::span<const int> rejected, double beta,
                           std::span<double> grad);

}  // namespace supercorrect
