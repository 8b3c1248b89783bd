#include "supercorrect/trainer.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "supercorrect/util.hpp"

namespace supercorrect {

SchedulerKind scheduler_from_string(std::string_view name) {
  if (name == "constant") return SchedulerKind::constant;
  if (name == "cosine") return SchedulerKind::cosine;
  throw std::invalid_argument("unknown scheduler: " + std::string(name));
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "gd") return OptimizerKind::gd;
  if (name == "adamw") return OptimizerKind::adamw;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

double scheduled_lr(double lr_max, SchedulerKind kind, double warmup_ratio, int step,
                    int total_steps) {
  int warmup = static_cast<int>(warmup_ratio * total_steps);
  if (warmup > 0 && step < warmup) return lr_max * (step + 1) / warmup;
  if (kind == SchedulerKind::constant) return lr_max;
  return lr_max * 0.5 * (1.0 + std::cos(std::numbers::pi * step / total_steps));
}

namespace {

class AdamW {
 public:
  AdamW(size_t n, double weight_decay = 0.01) : m_(n, 0.0), v_(n, 0.0), wd_(weight_decay) {}

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    ++t_;
    double bc1 = 1.0 - std::pow(kBeta1, t_);
    double bc2 = 1.0 - std::pow(kBeta2, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      double update = (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + kEps);
      params[i] -= lr * (update + wd_ * params[i]);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<double> m_;
  std::vector<double> v_;
  double wd_;
  int t_ = 0;
};

// Mean loss/gradient over data[begin, end). Work is split into contiguous
// per-worker slices with private gradient buffers reduced in worker order,
// so results do not depend on thread scheduling.
template <typename Example, typename LossGradFn>
double batch_loss_grad(size_t param_count, const std::vector<Example>& data, size_t begin,
                       size_t end, int workers, const LossGradFn& fn, std::vector<double>& grad) {
  size_t n = end - begin;
  size_t nw = std::min<size_t>(std::max(1, workers), n);
  std::vector<std::vector<double>> worker_grads(nw, std::vector<double>(param_count, 0.0));
  std::vector<double> worker_losses(nw, 0.0);
  size_t chunk = (n + nw - 1) / nw;
  parallel_for_ordered(nw, static_cast<int>(nw), [&](size_t w) {
    size_t lo = begin + w * chunk;
    size_t hi = std::min(end, lo + chunk);
    for (size_t i = lo; i < hi; ++i) worker_losses[w] += fn(data[i], worker_grads[w]);
  });
  double total = 0.0;
  for (size_t w = 0; w < nw; ++w) {
    total += worker_losses[w];
    for (size_t i = 0; i < grad.size(); ++i) grad[i] += worker_grads[w][i];
  }
  for (double& g : grad) g /= static_cast<double>(n);
  return total / static_cast<double>(n);
}

// Shared epoch/step loop with divergence rollback. step_fn computes the
// batch loss/grad for the current model and applies the optimizer update;
// it returns {loss, lr}.
template <typename StepFn>
TrainResult run_loop(ToyLM init, int epochs, size_t batches_per_epoch, int max_steps,
                     const StepFn& step_fn) {
  TrainResult result{std::move(init)};
  long long total_steps = static_cast<long long>(batches_per_epoch) * epochs;
  if (max_steps > 0 && max_steps < total_steps) total_steps = max_steps;
  if (max_steps > 0 && total_steps < max_steps) {
    // Honor an explicit step budget even when it exceeds epochs*batches by
    // cycling through the data again.
    epochs = static_cast<int>((max_steps + batches_per_epoch - 1) / batches_per_epoch);
    total_steps = max_steps;
  }

  std::vector<double> last_good(result.model.params().begin(), result.model.params().end());
  int step = 0;
  for (int epoch = 0; epoch < epochs && step < total_steps; ++epoch) {
    double epoch_loss = 0.0;
    size_t epoch_batches = 0;
    for (size_t b = 0; b < batches_per_epoch && step < total_steps; ++b, ++step) {
      auto [loss, lr] = step_fn(result.model, b, step, static_cast<int>(total_steps));
      if (!std::isfinite(loss)) {
        std::copy(last_good.begin(), last_good.end(), result.model.params().begin());
        result.aborted = true;
        result.abort_reason = "non-finite loss at step " + std::to_string(step);
        if (epoch_batches) result.epoch_mean_loss.push_back(epoch_loss / epoch_batches);
        return result;
      }
      last_good.assign(result.model.params().begin(), result.model.params().end());
      result.trajectory.push_back({step, lr, loss});
      result.final_mean_loss = loss;
      epoch_loss += loss;
      ++epoch_batches;
    }
    if (epoch_batches) result.epoch_mean_loss.push_back(epoch_loss / epoch_batches);
  }
  return result;
}

}  // namespace

double mean_implied_preference(const ToyLM& policy, const ToyLM& reference,
                               const std::vector<PairExample>& pairs, double beta) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pairs)
    sum += implied_preference_probability(policy, reference, p.context, p.chosen, p.rejected, beta);
  return sum / static_cast<double>(pairs.size());
}

TrainResult train_dpo(const ToyLM& init, const ToyLM& reference,
                      const std::vector<PairExample>& pairs, const DpoConfig& cfg) {
  if (pairs.empty()) throw std::invalid_argument("train_dpo: empty pair stream");
  if (cfg.beta <= 0) throw std::invalid_argument("train_dpo: beta must be positive");
  if (init.vocab_size() != reference.vocab_size())
    throw std::invalid_argument("train_dpo: policy and reference vocabularies differ");

  size_t batch = std::max(1, cfg.batch_size);
  size_t batches_per_epoch = (pairs.size() + batch - 1) / batch;
  AdamW adamw(init.param_count());

  TrainResult result = run_loop(
      init, cfg.epochs, batches_per_epoch, cfg.max_steps,
      [&](ToyLM& model, size_t b, int step, int total_steps) -> std::pair<double, double> {
        size_t lo = b * batch;
        size_t hi = std::min(pairs.size(), lo + batch);
        std::vector<double> grad(model.param_count(), 0.0);
        double loss = batch_loss_grad(
            model.param_count(), pairs, lo, hi, cfg.workers,
            [&](const PairExample& p, std::vector<double>& g) {
              return dpo_loss_grad(model, reference, p.context, p.chosen, p.rejected, cfg.beta, g);
            },
            grad);
        double lr =
            scheduled_lr(cfg.learning_rate, cfg.scheduler, cfg.warmup_ratio, step, total_steps);
        if (cfg.optimizer == OptimizerKind::adamw) {
          adamw.step(model.params(), grad, lr);
        } else {
          auto params = model.params();
          for (size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
        }
        return {loss, lr};
      });
  result.final_implied_preference = mean_implied_preference(result.model, reference, pairs, cfg.beta);
  return result;
}

TrainResult train_sft(const ToyLM& init, const std::vector<SftExample>& corpus,
                      const SftConfig& cfg) {
  if (corpus.empty()) throw std::invalid_argument("train_sft: empty corpus");

  size_t micro = std::max(1, cfg.batch_size);
  size_t accum = std::max(1, cfg.grad_accum_steps);
  size_t effective = micro * accum;  // one optimizer step per effective batch
  size_t batches_per_epoch = (corpus.size() + effective - 1) / effective;
  AdamW adamw(init.param_count());

  return run_loop(
      init, cfg.epochs, batches_per_epoch, cfg.max_steps,
      [&](ToyLM& model, size_t b, int step, int total_steps) -> std::pair<double, double> {
        size_t lo = b * effective;
        size_t hi = std::min(corpus.size(), lo + effective);
        std::vector<double> grad(model.param_count(), 0.0);
        double loss = batch_loss_grad(
            model.param_count(), corpus, lo, hi, cfg.workers,
            [&](const SftExample& ex, std::vector<double>& g) {
              return sft_loss_grad(model, ex.prompt, ex.response, g);
            },
            grad);
        double lr =
            scheduled_lr(cfg.learning_rate, cfg.scheduler, cfg.warmup_ratio, step, total_steps);
        if (cfg.optimizer == OptimizerKind::adamw) {
          adamw.step(model.params(), grad, lr);
        } else {
          auto params = model.params();
          for (size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
        }
        return {loss, lr};
      });
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrainStep>& trajectory) {
  std::ostringstream ss;
  ss << "step,lr,loss\n";
  ss.precision(17);
  for (const auto& row : trajectory) ss << row.step << "," << row.lr << "," << row.loss << "\n";
  atomic_write_file(path, ss.str());
}

}  // namespace supercorrect
