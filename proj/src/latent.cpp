// SPDX-License-Identifier: Apache-2.0

#include "drgd/latent.hpp"

namespace drgd {

VariationalParams::VariationalParams(Eigen::Index embed_dim,
                                     Eigen::Index hidden_dim,
                                     Eigen::Index latent_dim, Rng& rng)
    : w_embed("variational.w_embed",
              nn::glorot_uniform(hidden_dim, embed_dim, rng)),
      w_latent("variational.w_latent",
               nn::glorot_uniform(hidden_dim, latent_dim, rng)),
      w_hidden("variational.w_hidden",
               nn::glorot_uniform(hidden_dim, hidden_dim, rng)),
      b_hidden("variational.b_hidden", ad::Mat::Zero(hidden_dim, 1)),
      w_mean("variational.w_mean",
             nn::glorot_uniform(latent_dim, hidden_dim, rng)),
      b_mean("variational.b_mean", ad::Mat::Zero(latent_dim, 1)),
      w_logvar("variational.w_logvar",
               nn::glorot_uniform(latent_dim, hidden_dim, rng)),
      b_logvar("variational.b_logvar", ad::Mat::Zero(latent_dim, 1)) {}

PosteriorParams posterior_params(ad::Tape& t, VariationalParams& p,
                                 ad::Var y_prev_embedding, ad::Var z_prev,
                                 ad::Var h_prev_decoder) {
  ad::Var pre = t.add(t.add(t.matmul(p.w_embed.var(), y_prev_embedding),
                            t.matmul(p.w_latent.var(), z_prev)),
                      t.add(t.matmul(p.w_hidden.var(), h_prev_decoder),
                            p.b_hidden.var()));
  ad::Var hidden = t.sigmoid(pre);
  PosteriorParams out;
  out.mu = t.add(t.matmul(p.w_mean.var(), hidden), p.b_mean.var());
  out.log_var = t.clamp(t.add(t.matmul(p.w_logvar.var(), hidden),
                              p.b_logvar.var()),
                        -kLogVarClamp, kLogVarClamp);
  return out;
}

ad::Var reparameterize(ad::Tape& t, ad::Var mu, ad::Var log_var, ad::Var eps) {
  ad::Var std_dev = t.exp(t.scale(log_var, 0.5));
  return t.add(mu, t.mul(std_dev, eps));
}

ad::Var kl_step(ad::Tape& t, ad::Var mu, ad::Var log_var) {
  ad::Var ones = t.constant(ad::Mat::Ones(mu.rows(), 1));
  ad::Var terms =
      t.sub(t.sub(t.add(t.mul(mu, mu), t.exp(log_var)), ones), log_var);
  return t.scale(t.sum(terms), 0.5);
}

}  // namespace drgd
