// SPDX-License-Identifier: Apache-2.0
//
// Recurrent variational module. The posterior over the step-t latent
// variable is a diagonal Gaussian whose parameters come from the previous
// output embedding, the previous latent sample, and the previous
// attention-informed decoder state. Sampling goes through the
// reparameterization z = mu + exp(logvar / 2) . eps, and each step pays a
// closed-form KL against the standard-normal prior.

#pragma once

#include <vector>

#include "drgd/nn.hpp"

namespace drgd {

// log-variance outputs are clamped to this range before exp.
inline constexpr double kLogVarClamp = 8.0;

struct VariationalParams {
  nn::Param w_embed;      // hidden x embed_dim
  nn::Param w_latent;     // hidden x latent_dim
  nn::Param w_hidden;     // hidden x hidden
  nn::Param b_hidden;     // hidden x 1
  nn::Param w_mean;       // latent_dim x hidden
  nn::Param b_mean;       // latent_dim x 1
  nn::Param w_logvar;     // latent_dim x hidden
  nn::Param b_logvar;     // latent_dim x 1

  VariationalParams() = default;
  VariationalParams(Eigen::Index embed_dim, Eigen::Index hidden_dim,
                    Eigen::Index latent_dim, Rng& rng);

  Eigen::Index latent_dim() const { return w_mean.value().rows(); }

  std::vector<nn::Param*> params() {
    return {&w_embed, &w_latent, &w_hidden, &b_hidden,
            &w_mean,  &b_mean,   &w_logvar, &b_logvar};
  }
};

struct PosteriorParams {
  ad::Var mu;       // latent_dim x 1
  ad::Var log_var;  // latent_dim x 1, clamped to [-kLogVarClamp, kLogVarClamp]
};

struct LatentState {
  ad::Var z;        // latent_dim x 1
  ad::Var mu;
  ad::Var log_var;
};

// hidden = sigmoid(w_embed y_prev + w_latent z_prev + w_hidden h_prev + b);
// mu and log_var are affine in that hidden vector.
PosteriorParams posterior_params(ad::Tape& tape, VariationalParams& p,
                                 ad::Var y_prev_embedding, ad::Var z_prev,
                                 ad::Var h_prev_decoder);

// z = mu + exp(log_var / 2) . eps. eps all-zero gives the deterministic mode
// z = mu.
ad::Var reparameterize(ad::Tape& tape, ad::Var mu, ad::Var log_var,
                       ad::Var eps);

// KL(N(mu, diag(exp(log_var))) || N(0, I)) in closed form:
// 0.5 * sum(mu^2 + exp(log_var) - 1 - log_var). Nonnegative, 0 iff mu = 0
// and log_var = 0.
ad::Var kl_step(ad::Tape& tape, ad::Var mu, ad::Var log_var);

}  // namespace drgd
