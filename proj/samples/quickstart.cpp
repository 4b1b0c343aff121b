// Minimal library use: train a bigram oracle, score one paired item, print
// the entropies and the delta.

#include <cstdio>

#include "calsurp/calsurp.hpp"

int main() {
  using namespace calsurp;

  const std::string training =
      "the storm broke over the harbour and the boats came home\n"
      "the boats came home late and the harbour was dark\n"
      "she waited by the harbour and the storm broke";
  auto model = std::make_shared<const NGramModel>(train_ngram(training, 2, Smoothing::add_k(0.1)));
  LocalProvider provider(model, {});

  PairedItem item;
  item.pair_id = "demo";
  item.context = "she waited by the harbour";
  item.original = {"demo-x", "en", "anon", Role::original, "the storm broke over the harbour"};
  item.degraded = {"demo-x2", "en", "anon", Role::degraded, "the boats was dark and the storm"};

  PairResult r = analyze_pair(provider, item);
  std::printf("model %s\n", provider.model_id().c_str());
  std::printf("original: H=%.3f H|Y=%.3f I=%.3f\n", r.original.h_bare, r.original.h_cond, r.original.mi);
  std::printf("degraded: H=%.3f H|Y=%.3f I=%.3f\n", r.degraded.h_bare, r.degraded.h_cond, r.degraded.mi);
  std::printf("delta I = %+.3f (%s)\n", r.delta_i, r.supports_prediction ? "supports" : "does not support");
  return 0;
}
