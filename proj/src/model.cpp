// SPDX-License-Identifier: Apache-2.0

#include "drgd/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace drgd {

DecoderMode decoder_mode_from_string(const std::string& name) {
  if (name == "drgd") {
    return DecoderMode::kDrgd;
  }
  if (name == "stand") {
    return DecoderMode::kStand;
  }
  throw std::invalid_argument("unknown decoder mode: " + name +
                              " (expected drgd or stand)");
}

std::string to_string(DecoderMode mode) {
  return mode == DecoderMode::kDrgd ? "drgd" : "stand";
}

void ModelConfig::validate() const {
  if (embed_dim < 1 || hidden_dim < 1 || latent_dim < 1) {
    throw std::invalid_argument("model config: dimensions must be >= 1");
  }
  if (source_vocab < data::kReservedCount ||
      target_vocab < data::kReservedCount) {
    throw std::invalid_argument(
        "model config: vocabulary sizes must cover the reserved tokens");
  }
  if (max_src_len < 1 || max_tgt_len < 2) {
    throw std::invalid_argument(
        "model config: need max_src_len >= 1 and max_tgt_len >= 2");
  }
}

OutputParams::OutputParams(const ModelConfig& config, Rng& rng)
    : w_hidden_out("output.w_hidden_out",
                   nn::glorot_uniform(config.hidden_dim, config.hidden_dim,
                                      rng)),
      b_out("output.b_out", ad::Mat::Zero(config.hidden_dim, 1)),
      w_vocab("output.w_vocab",
              nn::glorot_uniform(config.target_vocab, config.hidden_dim, rng)),
      b_vocab("output.b_vocab", ad::Mat::Zero(config.target_vocab, 1)) {
  if (config.mode == DecoderMode::kDrgd) {
    w_latent_out = nn::Param(
        "output.w_latent_out",
        nn::glorot_uniform(config.hidden_dim, config.latent_dim, rng));
  }
}

std::vector<nn::Param*> OutputParams::params() {
  std::vector<nn::Param*> out;
  if (w_latent_out.value().size() != 0) {
    out.push_back(&w_latent_out);
  }
  out.push_back(&w_hidden_out);
  out.push_back(&b_out);
  out.push_back(&w_vocab);
  out.push_back(&b_vocab);
  return out;
}

ModelParams::ModelParams(const ModelConfig& cfg, std::uint64_t seed)
    : config(cfg) {
  config.validate();
  Rng rng(seed);
  source_embeddings = nn::EmbeddingTable("source_embeddings",
                                         config.source_vocab,
                                         config.embed_dim, rng);
  target_embeddings = nn::EmbeddingTable("target_embeddings",
                                         config.target_vocab,
                                         config.embed_dim, rng);
  encoder = EncoderParams(config.embed_dim, config.hidden_dim, rng);
  decoder = DecoderParams(config.embed_dim, config.hidden_dim, rng);
  if (config.mode == DecoderMode::kDrgd) {
    variational = VariationalParams(config.embed_dim, config.hidden_dim,
                                    config.latent_dim, rng);
  }
  output = OutputParams(config, rng);
}

std::vector<nn::Param*> ModelParams::census() {
  std::vector<nn::Param*> out = {&source_embeddings.weights,
                                 &target_embeddings.weights};
  for (nn::Param* p : encoder.params()) {
    out.push_back(p);
  }
  for (nn::Param* p : decoder.params()) {
    out.push_back(p);
  }
  if (config.mode == DecoderMode::kDrgd) {
    for (nn::Param* p : variational.params()) {
      out.push_back(p);
    }
  }
  for (nn::Param* p : output.params()) {
    out.push_back(p);
  }
  return out;
}

void ModelParams::zero_grads() {
  for (nn::Param* p : census()) {
    p->zero_grad();
  }
}

std::size_t ModelParams::parameter_count() {
  std::size_t n = 0;
  for (nn::Param* p : census()) {
    n += static_cast<std::size_t>(p->value().size());
  }
  return n;
}

std::string ModelParams::describe() {
  std::ostringstream out;
  for (nn::Param* p : census()) {
    out << p->name << ' ' << p->value().rows() << 'x' << p->value().cols()
        << '\n';
  }
  return out.str();
}

double ModelParams::grad_norm() {
  double sq = 0.0;
  for (nn::Param* p : census()) {
    if (p->grad().size() == 0) {
      continue;
    }
    if (p == &source_embeddings.weights || p == &target_embeddings.weights) {
      for (Eigen::Index r = 0; r < p->grad().rows(); ++r) {
        if (r == data::kPadId) {
          continue;
        }
        sq += p->grad().row(r).squaredNorm();
      }
    } else {
      sq += p->grad().squaredNorm();
    }
  }
  return std::sqrt(sq);
}

ad::Var output_distribution(ad::Tape& t, ModelParams& params, ad::Var h_layer2,
                            ad::Var z) {
  OutputParams& o = params.output;
  ad::Var pre = t.add(t.matmul(o.w_hidden_out.var(), h_layer2), o.b_out.var());
  if (params.config.mode == DecoderMode::kDrgd) {
    if (z.node == nullptr) {
      throw std::invalid_argument("output_distribution: drgd mode needs z");
    }
    pre = t.add(t.matmul(o.w_latent_out.var(), z), pre);
  }
  ad::Var combined = t.tanh(pre);
  ad::Var logits =
      t.add(t.matmul(o.w_vocab.var(), combined), o.b_vocab.var());
  return t.log_softmax(logits);
}

NoiseFn zero_noise(Eigen::Index latent_dim) {
  return [latent_dim](std::size_t, std::size_t) {
    return ad::Mat::Zero(latent_dim, 1);
  };
}

NoiseFn gaussian_noise(Eigen::Index latent_dim, Rng& rng) {
  return [latent_dim, &rng](std::size_t, std::size_t) {
    ad::Mat eps(latent_dim, 1);
    for (Eigen::Index i = 0; i < latent_dim; ++i) {
      eps(i, 0) = rng.gaussian();
    }
    return eps;
  };
}

DecoderState initial_decoder(const EncoderOutput& enc) {
  return DecoderState{enc.init_state, enc.init_state};
}

LatentState initial_latent(ad::Tape& t, const ModelConfig& config) {
  LatentState s;
  if (config.mode == DecoderMode::kDrgd) {
    s.z = t.zeros(config.latent_dim, 1);
  }
  return s;
}

StepOutput step_inference(ad::Tape& t, ModelParams& params,
                          const AttentionCache& cache, int y_prev_id,
                          const DecoderState& state,
                          const LatentState& latent_prev,
                          const EncoderOutput& enc, bool deterministic_z,
                          const ad::Mat* eps) {
  ad::Var y_emb = nn::embed_col(t, params.target_embeddings, y_prev_id);
  StepOutput out;
  if (params.config.mode == DecoderMode::kDrgd) {
    PosteriorParams post = posterior_params(t, params.variational, y_emb,
                                            latent_prev.z, state.h_layer2);
    out.latent.mu = post.mu;
    out.latent.log_var = post.log_var;
    if (deterministic_z) {
      out.latent.z = post.mu;
    } else {
      if (eps == nullptr) {
        throw std::invalid_argument(
            "step_inference: sampling mode needs an eps vector");
      }
      out.latent.z = reparameterize(t, post.mu, post.log_var,
                                    t.constant(*eps));
    }
  }
  DecoderStepResult step =
      decoder_step_cached(t, params.decoder, cache, y_emb, state, enc);
  out.state = step.state;
  out.attention = step.weights;
  out.log_probs =
      output_distribution(t, params, step.state.h_layer2, out.latent.z);
  return out;
}

ExampleForward forward_example(ad::Tape& t, ModelParams& params,
                               const std::vector<int>& source,
                               const std::vector<int>& target,
                               const NoiseFn& noise, std::size_t example_index,
                               bool collect_steps) {
  if (target.empty()) {
    throw std::invalid_argument("forward_example: empty target");
  }
  const bool drgd = params.config.mode == DecoderMode::kDrgd;
  EncoderOutput enc =
      encode(t, params.encoder, params.source_embeddings, source);
  AttentionCache cache(t, params.decoder.attention, enc);
  DecoderState state = initial_decoder(enc);
  LatentState latent = initial_latent(t, params.config);

  ExampleForward out;
  out.nll = t.zeros(1, 1);
  out.kl = t.zeros(1, 1);
  out.target_steps = target.size();
  for (std::size_t step = 0; step < target.size(); ++step) {
    const int y_prev =
        step == 0 ? data::kBosId : target[step - 1];
    ad::Var y_emb = nn::embed_col(t, params.target_embeddings, y_prev);
    StepOutput so;
    if (drgd) {
      PosteriorParams post = posterior_params(t, params.variational, y_emb,
                                              latent.z, state.h_layer2);
      ad::Var z = reparameterize(t, post.mu, post.log_var,
                                 t.constant(noise(example_index, step)));
      out.kl = t.add(out.kl, kl_step(t, post.mu, post.log_var));
      so.latent = LatentState{z, post.mu, post.log_var};
    }
    DecoderStepResult ds =
        decoder_step_cached(t, params.decoder, cache, y_emb, state, enc);
    state = ds.state;
    so.state = ds.state;
    so.attention = ds.weights;
    so.log_probs =
        output_distribution(t, params, state.h_layer2, so.latent.z);
    out.nll = t.add(
        out.nll,
        t.scale(t.rows(so.log_probs, {target[step]}), -1.0));
    if (drgd) {
      latent = so.latent;
    }
    if (collect_steps) {
      out.steps.push_back(so);
    }
  }
  return out;
}

BatchForward forward_teacher_forced(ad::Tape& t, ModelParams& params,
                                    const data::Batch& batch,
                                    const NoiseFn& noise, bool collect_steps) {
  if (batch.size() == 0) {
    throw std::invalid_argument("forward_teacher_forced: empty batch");
  }
  ad::Var nll_sum = t.zeros(1, 1);
  ad::Var kl_sum = t.zeros(1, 1);
  BatchForward out;
  for (Eigen::Index n = 0; n < batch.size(); ++n) {
    const std::vector<int> source = batch.source_row(n);
    const std::vector<int> target = batch.target_row(n);
    if (target.empty()) {
      throw std::invalid_argument("forward_teacher_forced: example " +
                                  std::to_string(n) + " has no target");
    }
    ExampleForward ex =
        forward_example(t, params, source, target, noise,
                        static_cast<std::size_t>(n), collect_steps);
    nll_sum = t.add(nll_sum, ex.nll);
    kl_sum = t.add(kl_sum, ex.kl);
    out.total_target_steps += ex.target_steps;
    if (collect_steps) {
      out.steps.push_back(std::move(ex.steps));
    }
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  out.nll = t.scale(nll_sum, inv_n);
  out.kl = t.scale(kl_sum, inv_n);
  out.loss = t.add(out.nll, out.kl);
  return out;
}

}  // namespace drgd
