#include "antgan/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>

#include "antgan/adam.hpp"
#include "antgan/losses.hpp"

namespace antgan {

ReplayBuffer::ReplayBuffer(std::int64_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw UsageError("ReplayBuffer: capacity must be >= 1");
}

Tensor<float> ReplayBuffer::push(const Tensor<float>& img, Rng& rng) {
    if (img.tracked()) throw UsageError("ReplayBuffer: pushed image must be detached");
    if (size() < capacity_) {
        store_.push_back(img);
        return img;
    }
    if (rng.uniform() < 0.5) return img;
    const std::uint64_t k = rng.uniform_int(static_cast<std::uint64_t>(store_.size()));
    Tensor<float> out = store_[k];
    store_[k] = img;
    return out;
}

Direction direction_from_string(const std::string& s) {
    if (s == "a2n") return Direction::a2n;
    if (s == "n2a") return Direction::n2a;
    throw UsageError("unknown direction '" + s + "' (expected a2n|n2a)");
}

namespace {

// Wraps a generator so repeated application to the same tensor within one
// step reuses the recorded forward pass (the adversarial and cycle terms
// share it).
GenFn<float> memoized_generator(const GeneratorParams<float>& g) {
    auto cache = std::make_shared<std::map<const void*, Tensor<float>>>();
    return [&g, cache](Tape<float>* tape, const Tensor<float>& x) {
        if (auto it = cache->find(x.id()); it != cache->end()) return it->second;
        Tensor<float> y = generator_forward(tape, g, x);
        (*cache)[x.id()] = y;
        return y;
    };
}

double item_or_zero(const Tensor<float>& t) {
    return t.valid() ? static_cast<double>(t.item()) : 0.0;
}

std::string checkpoint_name(std::int64_t iter) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "model_%06lld.antw", static_cast<long long>(iter));
    return buf;
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
    cfg.validate();
    Dataset ds = load_dataset(cfg.dataset_path);
    if (ds.image_size != cfg.scale.image_size)
        throw UsageError("dataset image size " + std::to_string(ds.image_size) +
                         " does not match configured image_size " +
                         std::to_string(cfg.scale.image_size));
    SplitPools pools = split_dataset(ds, cfg.seed);
    if (pools.train_normal.empty() || pools.train_abnormal.empty())
        throw UsageError("training pools are empty; dataset too small");

    ModelSet m;
    m.scale = cfg.scale;
    m.use_shortcut = cfg.enable_shortcut;
    m.g_a2n = build_generator<float>(cfg.scale, cfg.enable_shortcut,
                                     Rng::derive(cfg.seed, seed_stream::g_a2n).next_u64());
    m.g_n2a = build_generator<float>(cfg.scale, cfg.enable_shortcut,
                                     Rng::derive(cfg.seed, seed_stream::g_n2a).next_u64());
    m.d_n = build_discriminator<float>(cfg.scale, Rng::derive(cfg.seed, seed_stream::d_n).next_u64());
    m.d_a = build_discriminator<float>(cfg.scale, Rng::derive(cfg.seed, seed_stream::d_a).next_u64());

    std::vector<Tensor<float>> g_params = m.g_a2n.params();
    for (auto& p : m.g_n2a.params()) g_params.push_back(p);
    Adam<float> adam_g(std::move(g_params), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    Adam<float> adam_dn(m.d_n.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    Adam<float> adam_da(m.d_a.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

    ReplayBuffer buf_n(cfg.buffer_capacity), buf_a(cfg.buffer_capacity);
    Rng loop_rng = Rng::derive(cfg.seed, seed_stream::loop);

    make_directories(cfg.out_dir);
    TrainResult result;
    result.checkpoint_path = cfg.out_dir + "/model_final.antw";
    result.loss_log_path = cfg.out_dir + "/losses.csv";
    std::ofstream csv(result.loss_log_path, std::ios::binary);
    if (!csv) throw IoError("cannot open '" + result.loss_log_path + "' for writing");
    csv << "iter,g_adv_a2n,g_adv_n2a,cc_ac,cc_nc,am,d_n,d_a\n";

    const std::int64_t S = cfg.scale.image_size;
    auto dn_fn = [&m](Tape<float>* t, const Tensor<float>& v) {
        return discriminator_forward(t, m.d_n, v);
    };
    auto da_fn = [&m](Tape<float>* t, const Tensor<float>& v) {
        return discriminator_forward(t, m.d_a, v);
    };

    auto run_iteration = [&](std::int64_t iter) {
        const SliceSample& sa = sample(pools.train_abnormal, loop_rng);
        const SliceSample& sn = sample(pools.train_normal, loop_rng);
        Tensor<float> x_a = sa.image.reshaped({1, 1, S, S});
        Tensor<float> x_n = sn.image.reshaped({1, 1, S, S});

        // Generator step. Discriminator weights are frozen so backward skips
        // their weight gradients; activations still pass gradients through.
        m.d_n.set_requires_grad(false);
        m.d_a.set_requires_grad(false);
        Tape<float> tg;
        GenFn<float> g_a2n_fn = memoized_generator(m.g_a2n);
        GenFn<float> g_n2a_fn = memoized_generator(m.g_n2a);
        Tensor<float> fake_n = g_a2n_fn(&tg, x_a);
        Tensor<float> fake_a = g_n2a_fn(&tg, x_n);
        Tensor<float> g_adv_a2n = loss_gan_g<float>(&tg, dn_fn, fake_n, cfg.weights.adv_form);
        Tensor<float> g_adv_n2a = loss_gan_g<float>(&tg, da_fn, fake_a, cfg.weights.adv_form);
        CycleLoss<float> cc;
        if (cfg.enable_ac || cfg.enable_nc)
            cc = loss_cycle<float>(&tg, g_a2n_fn, g_n2a_fn, x_a, x_n, cfg.enable_ac, cfg.enable_nc);
        Tensor<float> am;
        if (cfg.enable_am)
            am = loss_am<float>(&tg, fake_n, x_a, sa.mask().reshaped({1, 1, S, S}));
        Tensor<float> g_total = loss_full<float>(&tg, g_adv_a2n, g_adv_n2a, &cc.ac, &cc.nc, &am,
                                                 cfg.weights);
        adam_g.zero_grad();
        tg.backward(g_total);
        adam_g.step();
        m.d_n.set_requires_grad(true);
        m.d_a.set_requires_grad(true);

        // Discriminator steps, on replay-buffered fakes.
        Tensor<float> fake_n_hist = buf_n.push(fake_n.detach(), loop_rng);
        Tensor<float> fake_a_hist = buf_a.push(fake_a.detach(), loop_rng);
        Tape<float> tdn;
        Tensor<float> d_n_loss = loss_gan_d<float>(&tdn, dn_fn, x_n, fake_n_hist, cfg.weights.adv_form);
        adam_dn.zero_grad();
        tdn.backward(d_n_loss);
        adam_dn.step();
        Tape<float> tda;
        Tensor<float> d_a_loss = loss_gan_d<float>(&tda, da_fn, x_a, fake_a_hist, cfg.weights.adv_form);
        adam_da.zero_grad();
        tda.backward(d_a_loss);
        adam_da.step();

        const double row[7] = {item_or_zero(g_adv_a2n), item_or_zero(g_adv_n2a),
                               item_or_zero(cc.ac),     item_or_zero(cc.nc),
                               item_or_zero(am),        item_or_zero(d_n_loss),
                               item_or_zero(d_a_loss)};
        bool finite = true;
        for (double v : row) finite = finite && std::isfinite(v);
        if (!finite) throw NumericError("non-finite loss");
        char line[256];
        std::snprintf(line, sizeof(line), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                      static_cast<long long>(iter), row[0], row[1], row[2], row[3], row[4], row[5],
                      row[6]);
        csv << line;
    };

    for (std::int64_t iter = 1; iter <= cfg.iterations; ++iter) {
        try {
            run_iteration(iter);
        } catch (const NumericError& e) {
            // Divergence: leave a diagnostic checkpoint behind before aborting.
            save_models(cfg.out_dir + "/model_diverged.antw", m);
            csv.flush();
            throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(iter) +
                               "; diagnostic checkpoint written to " + cfg.out_dir +
                               "/model_diverged.antw");
        }
        if (cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0)
            save_models(cfg.out_dir + "/" + checkpoint_name(iter), m);
        result.iterations_run = iter;
    }

    csv.flush();
    if (!csv) throw IoError("write failed for '" + result.loss_log_path + "'");
    save_models(result.checkpoint_path, m);
    return result;
}

std::vector<Tensor<float>> translate(const ModelSet& models, Direction dir,
                                     const std::vector<Tensor<float>>& images) {
    const GeneratorParams<float>& g = dir == Direction::a2n ? models.g_a2n : models.g_n2a;
    const std::int64_t S = g.scale.image_size;
    std::vector<Tensor<float>> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        if (img.size() != S * S)
            throw DimensionError("translate: image has " + std::to_string(img.size()) +
                                 " pixels, checkpoint expects " + std::to_string(S * S));
        Tensor<float> y = generator_forward<float>(nullptr, g, img.reshaped({1, 1, S, S}));
        out.push_back(y.reshaped({1, S, S}));
    }
    return out;
}

}  // namespace antgan
