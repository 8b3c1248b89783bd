#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "supercorrect/losses.hpp"
#include "supercorrect/toylm.hpp"

namespace supercorrect {

enum class SchedulerKind { constant, cosine };
enum class OptimizerKind { gd, adamw };

SchedulerKind scheduler_from_string(std::string_view name);
OptimizerKind optimizer_from_string(std::string_view name);

// Cross-model DPO hyperparameters. Defaults mirror the DPO stage recipe:
// 8 epochs, global batch 128, lr 1e-6, cosine schedule, warmup 0.05.
struct DpoConfig {
  double beta = 0.1;
  double learning_rate = 1e-6;
  int epochs = 8;
  int batch_size = 128;
  double warmup_ratio = 0.05;
  SchedulerKind scheduler = SchedulerKind::cosine;
  OptimizerKind optimizer = OptimizerKind::gd;
  int max_steps = 0;  // 0: run epochs to completion
  int workers = 1;
};

// SFT-stage defaults: 4 epochs, batch 8, grad accumulation 16, lr 2e-5,
// AdamW, cosine schedule, warmup 0.02.
struct SftConfig {
  double learning_rate = 2e-5;
  int epochs = 4;
  int batch_size = 8;
  int grad_accum_steps = 16;
  double warmup_ratio = 0.02;
  SchedulerKind scheduler = SchedulerKind::cosine;
  OptimizerKind optimizer = OptimizerKind::adamw;
  int max_steps = 0;
  int workers = 1;
};

// One preference example: conditioning context tokens (problem plus verified
// prefix steps) and the chosen/rejected annotation tokens.
struct PairExample {
  std::vector<int> context;
  std::vector<int> chosen;
  std::vector<int> rejected;
};

struct SftExample {
  std::vector<int> prompt;
  std::vector<int> response;
};

struct TrainStep {
  int step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  ToyLM model;
  std::vector<TrainStep> trajectory;        // one row per optimizer step
  std::vector<double> epoch_mean_loss;
  double final_mean_loss = 0.0;
  double final_implied_preference = 0.0;    // DPO runs only
  bool aborted = false;                     // non-finite loss; model = last good params
  std::string abort_reason;
};

// Policy starts from `init` (normally parameter-equal to `reference`, which
// stays frozen). Gradients are the analytic closed forms from losses.hpp.
TrainResult train_dpo(const ToyLM& init, const ToyLM& reference,
                      const std::vector<PairExample>& pairs, const DpoConfig& cfg);

TrainResult train_sft(const ToyLM& init, const std::vector<SftExample>& corpus,
                      const SftConfig& cfg);

double mean_implied_preference(const ToyLM& policy, const ToyLM& reference,
                               const std::vector<PairExample>& pairs, double beta);

// lr(t) for 0-based step t of T total: linear warmup over warmup_ratio*T
// steps, then lr_max/2 * (1 + cos(pi*t/T)) in cosine mode or lr_max flat.
double scheduled_lr(double lr_max, SchedulerKind kind, double warmup_ratio, int step,
                    int total_steps);

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrainStep>& trajectory);

}  // namespace supercorrect
