// Generates a small synthetic corpus, tags it with the lexicon, trains a
// count-feature model and runs the preset interventions.
#include <iostream>

#include "socorient/eval.hpp"
#include "socorient/explain.hpp"
#include "socorient/synthetic.hpp"
#include "socorient/tagging/lexicon.hpp"

using namespace socorient;

int main() {
  synth::SynthConfig cfg;
  cfg.n_conversations = 600;
  cfg.n_test = 150;
  const auto data = synth::generate(cfg);

  tagging::TagIndex tags;
  for (const auto& c : data.corpus) tags.set(c.id, tagging::tag_with_lexicon(c));

  const auto train = corpus::select_split(data.corpus, Split::Train);
  const auto test = corpus::select_split(data.corpus, Split::Test);
  const auto predictor = eval::fit_logistic(train, tags, {}, 42);
  std::cout << "test accuracy " << text::format_fixed(eval::evaluate(predictor, test, tags), 3) << "\n\n";

  std::vector<explain::InterventionResult> rows;
  for (const auto& spec : explain::intervention_presets()) {
    rows.push_back(explain::run_intervention(predictor, data.corpus, tags, spec));
  }
  std::cout << explain::intervention_csv(rows);
}
