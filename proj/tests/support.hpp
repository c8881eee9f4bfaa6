// Shared fixtures for the unit and acceptance suites.
#pragma once

#include <functional>
#include <vector>

#include "dalta/gradcheck.hpp"
#include "dalta/model.hpp"
#include "dalta/trainer.hpp"

namespace dalta::testsupport {

// Toy two-domain instance sized for exhaustive gradient probing.
struct ToyInstance {
    EncoderParams enc;
    DecoderParams dec_s;
    DecoderParams dec_t;
    DiscriminatorParams disc;
    Tensor2 xs, xt;     // count rows
    Tensor2 eps_s, eps_t; // frozen reparameterization noise
    LossWeights weights;

    ToyInstance(uint64_t seed, int n_source = 5, int n_target = 3, int vocab = 12, int hidden = 10,
                int latent = 4, int k_source = 3, int k_target = 2, int disc_hidden = 6)
        : enc(vocab, hidden, latent), dec_s("dec_s", latent, k_source, vocab),
          dec_t("dec_t", latent, k_target, vocab), disc(latent, disc_hidden),
          xs(n_source, vocab), xt(n_target, vocab), eps_s(n_source, latent),
          eps_t(n_target, latent) {
        Rng rng(seed);
        enc.init(rng);
        dec_s.init(rng);
        dec_t.init(rng);
        disc.init(rng);
        auto fill_counts = [&](Tensor2& x) {
            for (int i = 0; i < x.rows; ++i) {
                const int len = 6 + rng.uniform_int(8);
                for (int t = 0; t < len; ++t) x.at(i, rng.uniform_int(x.cols)) += 1.0;
            }
        };
        fill_counts(xs);
        fill_counts(xt);
        for (double& v : eps_s.data) v = rng.normal();
        for (double& v : eps_t.data) v = rng.normal();
    }

    std::vector<ParamBlock*> all_params() {
        std::vector<ParamBlock*> out = enc.all();
        for (ParamBlock* p : dec_s.all()) out.push_back(p);
        for (ParamBlock* p : dec_t.all()) out.push_back(p);
        for (ParamBlock* p : disc.all()) out.push_back(p);
        return out;
    }

    // Full objective with frozen noise; grads cover the discriminator too so
    // every parameter can be probed.
    std::function<double(bool)> full_loss_fn() {
        return [this](bool want_grad) {
            if (want_grad) zero_grad_all(all_params());
            const LossBreakdown b = dalta_forward_backward(
                enc, dec_s, dec_t, disc, xs, xt, eps_s, eps_t, weights, want_grad, true);
            return b.total;
        };
    }
};

} // namespace dalta::testsupport
