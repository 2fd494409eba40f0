#include <cmath>
#include <cstdio>
#include <vector>

#include "icl/analysis.hpp"
#include "icl/expcli.hpp"
#include "icl/pretraining.hpp"

namespace icl {

namespace {
struct SelfTest {
  int failures = 0;

  void report(const char* name, bool ok, const std::string& detail = "") {
    if (ok) {
      std::printf("[PASS] %s\n", name);
    } else {
      ++failures;
      std::printf("[FAIL] %s%s%s\n", name, detail.empty() ? "" : ": ", detail.c_str());
    }
  }
};

GeneralMambaParams random_general(int channels, int d_h, RngStream& rng) {
  GeneralMambaParams p;
  p.w_b.resize(d_h, channels);
  p.w_c.resize(d_h, channels);
  p.w.resize(channels);
  for (int i = 0; i < d_h; ++i)
    for (int j = 0; j < channels; ++j) {
      p.w_b(i, j) = 0.5 * rng.gaussian();
      p.w_c(i, j) = 0.5 * rng.gaussian();
    }
  for (int j = 0; j < channels; ++j) p.w[j] = 0.3 * rng.gaussian();
  p.b = -1.0 + 0.5 * rng.gaussian();
  return p;
}
}  // namespace

int run_selftest(int workers) {
  SelfTest t;
  RngStream rng(20240817);

  {  // Hermite orthonormality by quadrature
    bool ok = true;
    double worst = 0.0;
    for (int i = 0; i <= 8 && ok; ++i)
      for (int j = 0; j <= 8; ++j) {
        const double v = gauss_hermite_inner([i](double z) { return he(i, z); }, j, 16);
        double expect = 0.0;
        if (i == j) {
          expect = 1.0;
          for (int k = 2; k <= i; ++k) expect *= k;
        }
        worst = std::max(worst, std::abs(v - expect));
        if (std::abs(v - expect) > 1e-8) ok = false;
      }
    t.report("hermite_orthonormality", ok, "max deviation " + fmt_g17(worst));
  }

  {  // recurrence matches explicit polynomials
    bool ok = true;
    RngStream r2 = rng.child(1);
    for (int i = 0; i < 100 && ok; ++i) {
      const double z = 3.0 * r2.gaussian();
      const double explicit4[5] = {1.0, z, z * z - 1.0, z * z * z - 3.0 * z,
                                   z * z * z * z - 6.0 * z * z + 3.0};
      for (int k = 0; k <= 4; ++k)
        if (std::abs(he(k, z) - explicit4[k]) > 1e-12 * std::max(1.0, std::abs(explicit4[k])))
          ok = false;
    }
    t.report("hermite_recurrence", ok);
  }

  {  // SSM recurrence vs closed form
    double worst = 0.0;
    RngStream r2 = rng.child(2);
    for (int rep = 0; rep < 8; ++rep) {
      TaskDistribution dist{FeatureSpace::first_r(3, 2), LinkFunction::preset("he2"), 0.1};
      const Prompt p = sample_prompt(dist, 6, task_stream(r2, kStreamEval, rep), 0, rep);
      const EmbeddedPrompt z = embed_prompt(p);
      RngStream pr = r2.child(100 + rep);
      const GeneralMambaParams gp = random_general(z.d_tilde + 1, 4, pr);
      worst = std::max(worst,
                       (recurrence_forward(z, gp) - closed_form_outputs(z, gp)).cwiseAbs().maxCoeff());
    }
    t.report("recurrence_equals_closed_form", worst < 1e-10, "max |diff| " + fmt_g17(worst));
  }

  {  // gating partition of unity
    TaskDistribution dist{FeatureSpace::first_r(4, 2), LinkFunction::preset("he3"), 0.1};
    const Prompt p = sample_prompt(dist, 12, task_stream(rng.child(3), kStreamEval, 0), 0, 0);
    const EmbeddedPrompt z = embed_prompt(p);
    const GatingConstants gc{2.0, -4.0, 0.1};
    const Mat g = gating_weights(z, gc);
    double worst = 0.0;
    for (int l = 0; l <= z.n; ++l) {
      double total = 0.0, tail = 1.0;
      for (int j = 0; j <= l; ++j) {
        total += g(j, l);
        tail *= 1.0 - sigmoid(z.z(z.d_tilde, j) / gc.rho + gc.b);
      }
      worst = std::max(worst, std::abs(total + tail - 1.0));
    }
    t.report("gating_partition", worst < 1e-12, "max |defect| " + fmt_g17(worst));
  }

  {  // psi norm identity and phi relation
    bool ok = true;
    RngStream r2 = rng.child(4);
    for (int rep = 0; rep < 50 && ok; ++rep) {
      Vec theta(5);
      for (int i = 0; i < 5; ++i) theta[i] = r2.gaussian();
      const double c0 = r2.gaussian(), c1 = r2.gaussian(), c2 = r2.gaussian();
      const double n2 = psi(theta, c0, c1, c2).squaredNorm();
      const double expect = c0 * c0 + c1 * c1 * theta.squaredNorm() +
                            0.5 * c2 * c2 * theta.squaredNorm() * theta.squaredNorm();
      if (std::abs(n2 - expect) > 1e-10 * std::max(1.0, std::abs(expect))) ok = false;
      const Vec diff = phi(theta) - psi(theta, 1.0, 1.0, 1.0);
      for (int s = 0; s < diff.size(); ++s) {
        const SlotInfo info = slot_info(s, 5);
        const double want = info.kind == SlotKind::kSquare ? -1.0 / std::sqrt(2.0) : 0.0;
        if (std::abs(diff[s] - want) > 1e-12) ok = false;
      }
    }
    t.report("psi_identities", ok);
  }

  {  // stage-1 gradient vs central finite differences
    double worst = 0.0;
    RngStream r2 = rng.child(5);
    TaskDistribution dist{FeatureSpace::first_r(3, 2), LinkFunction::preset("he2"), 0.1};
    const GatingConstants gc{2.0, -1.0, 0.1};
    int tested = 0;
    for (int rep = 0; rep < 40 && tested < 10; ++rep) {
      std::vector<EmbeddedPrompt> tasks;
      std::vector<double> labels;
      for (int k = 0; k < 4; ++k) {
        const Prompt p = sample_prompt(dist, 5, task_stream(r2.child(rep), kStreamStage1, k), 0, k);
        tasks.push_back(embed_prompt(p));
        labels.push_back(p.query_label);
      }
      auto [mp, hp] = init_params(3, 0.5, gc, 8);
      (void)hp;
      bool away_from_kink = true;
      for (std::size_t k = 0; k < tasks.size(); ++k)
        if (std::abs(stage1_task_term(tasks[k], labels[k], mp).preact) < 1e-3)
          away_from_kink = false;
      if (!away_from_kink) continue;
      ++tested;
      const Vec grad = stage1_gradient(tasks, labels, mp);
      auto loss = [&](const Vec& gamma) {
        MambaParams q = mp;
        q.gamma = gamma;
        double acc = 0.0;
        for (std::size_t k = 0; k < tasks.size(); ++k) {
          const double f = std::max(0.0, mamba_scalar(tasks[k], q) / tasks[k].n);
          acc += (f - labels[k]) * (f - labels[k]);
        }
        return acc / static_cast<double>(tasks.size());
      };
      Vec fd(grad.size());
      const double h = 1e-6;
      for (int i = 0; i < grad.size(); ++i) {
        Vec gp = mp.gamma, gm = mp.gamma;
        gp[i] += h;
        gm[i] -= h;
        fd[i] = (loss(gp) - loss(gm)) / (2.0 * h);
      }
      worst = std::max(worst, (grad - fd).norm() / std::max(1e-12, grad.norm()));
    }
    t.report("stage1_gradient_fd", tested >= 5 && worst < 1e-5,
             "rel err " + fmt_g17(worst) + " on " + std::to_string(tested) + " instances");
  }

  {  // ridge KKT
    RngStream r2 = rng.child(6);
    Mat f(40, 8);
    Vec y(40);
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 8; ++j) f(i, j) = r2.gaussian();
      y[i] = r2.gaussian();
    }
    auto [u, kkt] = ridge_solve(f, y, 1e-3);
    (void)u;
    t.report("ridge_kkt", kkt < 1e-8, "residual " + fmt_g17(kkt));
  }

  {  // determinism across worker counts
    TaskDistribution dist{FeatureSpace::first_r(4, 2), LinkFunction::preset("he3"), 0.1};
    auto [mp, hp] = init_params(4, 0.5, GatingConstants{2.0, -4.0, 0.1}, 8);
    (void)hp;
    RngStream root(77);
    const Vec g1 = stage1_gradient_sampled(dist, 20, 16, mp, root, 1);
    const Vec g8 = stage1_gradient_sampled(dist, 20, 16, mp, root, workers > 1 ? workers : 8);
    t.report("worker_count_determinism", (g1 - g8).cwiseAbs().maxCoeff() == 0.0);
  }

  {  // Monte-Carlo inner product vs exact value
    const McEstimate e = mc_inner([](double z) { return he(1, z); }, 1, 200000, rng.child(7));
    t.report("mc_inner_he1", std::abs(e.estimate - 1.0) < 4.0 * e.std_error,
             fmt_g17(e.estimate) + " +- " + fmt_g17(e.std_error));
  }

  return t.failures;
}

}  // namespace icl
