// Python bindings for the distcma core. The surface mirrors the public
// headers closely; anything heavier than a struct copy releases the GIL so
// Python-implemented adapters (see distcma.external) can be driven from the
// sweep without deadlocking.

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <memory>
#include <sstream>

#include "distcma/analysis.hpp"
#include "distcma/dataset.hpp"
#include "distcma/effects.hpp"
#include "distcma/lexicon.hpp"
#include "distcma/model.hpp"
#include "distcma/overlap_model.hpp"
#include "distcma/pipeline.hpp"
#include "distcma/reference_stats.hpp"
#include "distcma/report.hpp"
#include "distcma/rng.hpp"
#include "distcma/stats.hpp"
#include "distcma/toy_model.hpp"
#include "distcma/types.hpp"
#include "distcma/version.hpp"

namespace py = pybind11;
using namespace distcma;

namespace {

// Lets Python subclasses implement the adapter contract. Each override
// reacquires the GIL, so the C++ side may call these from any thread.
class PyModelAdapter : public ModelAdapter {
 public:
  using ModelAdapter::ModelAdapter;

  ModelMeta meta() const override {
    PYBIND11_OVERRIDE_PURE(ModelMeta, ModelAdapter, meta);
  }

  LabelDistribution predict(const NliPair& pair) const override {
    PYBIND11_OVERRIDE_PURE(LabelDistribution, ModelAdapter, predict, pair);
  }

  std::pair<LabelDistribution, ActivationSnapshot> predict_with_capture(
      const NliPair& pair, const MediatorSpec& spec) const override {
    using Ret = std::pair<LabelDistribution, ActivationSnapshot>;
    PYBIND11_OVERRIDE_PURE(Ret, ModelAdapter, predict_with_capture, pair, spec);
  }

  LabelDistribution predict_with_patch(const NliPair& pair,
                                       const ActivationSnapshot& snapshot,
                                       Alignment alignment) const override {
    PYBIND11_OVERRIDE_PURE(LabelDistribution, ModelAdapter, predict_with_patch,
                           pair, snapshot, alignment);
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Minimal-pair NLI dataset generation and causal mediation analysis of "
      "predicative distributivity";
  m.attr("__version__") = kToolVersion;
  m.attr("ODDS_EPSILON") = kOddsEpsilon;

  py::register_exception<SweepInterrupted>(m, "SweepInterrupted");

  // ---- enums ----

  py::enum_<Label>(m, "Label")
      .value("entailment", Label::entailment)
      .value("neutral", Label::neutral)
      .value("contradiction", Label::contradiction);

  py::enum_<PairLabel>(m, "PairLabel")
      .value("entailment", PairLabel::entailment)
      .value("non_entailment", PairLabel::non_entailment);

  py::enum_<Alignment>(m, "Alignment")
      .value("strict", Alignment::strict)
      .value("min_length", Alignment::min_length);

  py::enum_<DpCategory>(m, "DpCategory")
      .value("person", DpCategory::person)
      .value("animal", DpCategory::animal)
      .value("object", DpCategory::object);

  py::enum_<Distributivity>(m, "Distributivity")
      .value("distributive", Distributivity::distributive)
      .value("ambiguous", Distributivity::ambiguous);

  py::enum_<HypothesisSubject>(m, "HypothesisSubject")
      .value("dp1", HypothesisSubject::dp1)
      .value("dp2", HypothesisSubject::dp2);

  py::enum_<DepthGroup>(m, "DepthGroup")
      .value("early", DepthGroup::early)
      .value("middle", DepthGroup::middle)
      .value("final", DepthGroup::final);

  py::enum_<LayerMode>(m, "LayerMode")
      .value("joint", LayerMode::joint)
      .value("mean_of_neurons", LayerMode::mean_of_neurons);

  // ---- core value types ----

  py::class_<LabelDistribution>(m, "LabelDistribution")
      .def(py::init<>())
      .def(py::init([](double e, double n, double c) {
             return LabelDistribution{e, n, c};
           }),
           py::arg("p_entailment"), py::arg("p_neutral"),
           py::arg("p_contradiction"))
      .def_readwrite("p_entailment", &LabelDistribution::p_entailment)
      .def_readwrite("p_neutral", &LabelDistribution::p_neutral)
      .def_readwrite("p_contradiction", &LabelDistribution::p_contradiction)
      .def("p", &LabelDistribution::p)
      .def("p_non_entailment", &LabelDistribution::p_non_entailment)
      .def("argmax", &LabelDistribution::argmax)
      .def("validate", &LabelDistribution::validate)
      .def("__repr__", [](const LabelDistribution& d) {
        std::ostringstream os;
        os << "LabelDistribution(" << d.p_entailment << ", " << d.p_neutral
           << ", " << d.p_contradiction << ")";
        return os.str();
      });

  py::class_<ModelMeta>(m, "ModelMeta")
      .def(py::init<>())
      .def_readwrite("name", &ModelMeta::name)
      .def_readwrite("n_layers", &ModelMeta::n_layers)
      .def_readwrite("hidden_size", &ModelMeta::hidden_size)
      .def_readwrite("n_parameters", &ModelMeta::n_parameters)
      .def_readwrite("vocab_size", &ModelMeta::vocab_size)
      .def_readwrite("label_order", &ModelMeta::label_order)
      .def_readwrite("thread_safe", &ModelMeta::thread_safe)
      .def("validate", &ModelMeta::validate);

  py::class_<ActivationCoord>(m, "ActivationCoord")
      .def(py::init<>())
      .def(py::init([](int layer, int neuron) {
             return ActivationCoord{layer, neuron};
           }),
           py::arg("layer"), py::arg("neuron"))
      .def_readwrite("layer", &ActivationCoord::layer)
      .def_readwrite("neuron", &ActivationCoord::neuron)
      .def(py::self == py::self)
      .def(py::self < py::self)
      .def("__repr__",
           [](const ActivationCoord& c) { return to_string(c); });

  py::class_<MediatorSpec>(m, "MediatorSpec")
      .def(py::init<>())
      .def(py::init<std::vector<ActivationCoord>>(), py::arg("coords"))
      .def_static("single", &MediatorSpec::single)
      .def_readwrite("coords", &MediatorSpec::coords)
      .def("validate", &MediatorSpec::validate, py::arg("n_layers"),
           py::arg("hidden_size"))
      .def(py::self == py::self);

  py::class_<ActivationSnapshot>(m, "ActivationSnapshot")
      .def(py::init<>())
      .def_readwrite("coords", &ActivationSnapshot::coords)
      .def_readwrite("values", &ActivationSnapshot::values)
      .def_readwrite("seq_len", &ActivationSnapshot::seq_len)
      .def("validate", &ActivationSnapshot::validate);

  // ---- lexicon and dataset ----

  py::class_<DeterminerPhrase>(m, "DeterminerPhrase")
      .def(py::init<>())
      .def(py::init([](std::string text, DpCategory cat) {
             return DeterminerPhrase{std::move(text), cat};
           }),
           py::arg("text"), py::arg("category"))
      .def_readwrite("text", &DeterminerPhrase::text)
      .def_readwrite("category", &DeterminerPhrase::category)
      .def(py::self == py::self);

  py::class_<Predicate>(m, "Predicate")
      .def(py::init<>())
      .def(py::init([](std::string text, Distributivity type, bool phrasal) {
             return Predicate{std::move(text), type, phrasal};
           }),
           py::arg("text"), py::arg("distributivity_type"),
           py::arg("is_phrasal") = false)
      .def_readwrite("text", &Predicate::text)
      .def_readwrite("distributivity_type", &Predicate::distributivity_type)
      .def_readwrite("is_phrasal", &Predicate::is_phrasal)
      .def(py::self == py::self);

  py::class_<Lexicon>(m, "Lexicon")
      .def(py::init<>())
      .def_readwrite("determiner_phrases", &Lexicon::determiner_phrases)
      .def_readwrite("predicates", &Lexicon::predicates)
      .def_readwrite("quantifier_blocklist", &Lexicon::quantifier_blocklist)
      .def_readwrite("version", &Lexicon::version)
      .def_readwrite("seed_note", &Lexicon::seed_note)
      .def("validate", &Lexicon::validate);

  m.def("load_lexicon", &load_lexicon, py::arg("path"));
  m.def("parse_lexicon", &parse_lexicon, py::arg("json_text"),
        py::arg("origin") = "<string>");
  m.def("contains_word", &contains_word, py::arg("text"), py::arg("token"));
  m.def("word_tokens", &word_tokens, py::arg("text"));

  py::class_<NliPair>(m, "NliPair")
      .def(py::init<>())
      .def_readwrite("pair_id", &NliPair::pair_id)
      .def_readwrite("premise", &NliPair::premise)
      .def_readwrite("hypothesis", &NliPair::hypothesis)
      .def_readwrite("dp1", &NliPair::dp1)
      .def_readwrite("dp2", &NliPair::dp2)
      .def_readwrite("hypothesis_subject", &NliPair::hypothesis_subject)
      .def_readwrite("predicate", &NliPair::predicate)
      .def_readwrite("label", &NliPair::label)
      .def("subject", &NliPair::subject,
           py::return_value_policy::reference_internal)
      .def("validate", &NliPair::validate)
      .def(py::self == py::self)
      .def("__repr__", [](const NliPair& p) {
        return "NliPair(" + p.pair_id + ": " + p.premise + " => " +
               p.hypothesis + ")";
      });

  py::class_<MatchedSet>(m, "MatchedSet")
      .def(py::init<>())
      .def_readwrite("match_id", &MatchedSet::match_id)
      .def_readwrite("control", &MatchedSet::control)
      .def_readwrite("interventions", &MatchedSet::interventions)
      .def("validate", &MatchedSet::validate)
      .def(py::self == py::self);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform_index", &Rng::uniform_index, py::arg("n"))
      .def("uniform_real", &Rng::uniform_real, py::arg("lo"), py::arg("hi"))
      .def("next", &Rng::next);

  m.def("render_premise", &render_premise);
  m.def("render_hypothesis", &render_hypothesis);
  m.def("label_for", &label_for);
  m.def("make_pair", &make_pair, py::arg("pair_id"), py::arg("dp1"),
        py::arg("dp2"), py::arg("subject"), py::arg("pred"));
  m.def("swap_pred", &swap_pred, py::arg("pair"), py::arg("lexicon"),
        py::arg("rng"));
  m.def("null_op", &null_op, py::arg("pair"));
  m.def("generate_pairs", &generate_pairs, py::arg("lexicon"),
        py::arg("rng_seed"), py::arg("max_pairs_per_group"),
        py::call_guard<py::gil_scoped_release>());
  m.def("dataset_to_jsonl", &dataset_to_jsonl, py::arg("sets"));
  m.def("dataset_from_jsonl", &dataset_from_jsonl, py::arg("text"),
        py::arg("origin") = "<string>");
  m.def("write_dataset", &write_dataset, py::arg("sets"), py::arg("path"));
  m.def("read_dataset", &read_dataset, py::arg("path"));
  m.def("dataset_fingerprint", &dataset_fingerprint, py::arg("sets"));

  // ---- statistics ----

  py::class_<TTestResult>(m, "TTestResult")
      .def(py::init<>())
      .def_readwrite("mean", &TTestResult::mean)
      .def_readwrite("sd", &TTestResult::sd)
      .def_readwrite("n", &TTestResult::n)
      .def_readwrite("t_statistic", &TTestResult::t_statistic)
      .def_readwrite("p_value_one_sided", &TTestResult::p_value_one_sided)
      .def_readwrite("alpha", &TTestResult::alpha)
      .def_readwrite("reject_h0", &TTestResult::reject_h0)
      .def_readwrite("degenerate", &TTestResult::degenerate);

  m.def("regularized_incomplete_beta", &regularized_incomplete_beta,
        py::arg("a"), py::arg("b"), py::arg("x"));
  m.def("student_t_sf", &student_t_sf, py::arg("t"), py::arg("df"));
  m.def("student_t_cdf", &student_t_cdf, py::arg("t"), py::arg("df"));
  m.def("one_sample_t", &one_sample_t, py::arg("values"), py::arg("alpha"));
  m.def("one_sample_t_lenient", &one_sample_t_lenient, py::arg("values"),
        py::arg("alpha"));
  m.def("pearson_r", &pearson_r, py::arg("xs"), py::arg("ys"));
  m.def("sample_mean", &sample_mean, py::arg("values"));
  m.def("sample_sd", &sample_sd, py::arg("values"));
  m.def("format_p_value", &format_p_value, py::arg("p"));

  // ---- adapters ----

  py::class_<ModelAdapter, PyModelAdapter>(m, "ModelAdapter")
      .def(py::init<>())
      .def("meta", &ModelAdapter::meta)
      .def("predict", &ModelAdapter::predict, py::arg("pair"))
      .def("predict_with_capture", &ModelAdapter::predict_with_capture,
           py::arg("pair"), py::arg("spec"))
      .def("predict_with_patch", &ModelAdapter::predict_with_patch,
           py::arg("pair"), py::arg("snapshot"), py::arg("alignment"));

  py::class_<ToyModel, ModelAdapter>(m, "ToyModel")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("star_coord", &ToyModel::star_coord)
      .def("dead_coord", &ToyModel::dead_coord)
      .def("closed_form", &ToyModel::closed_form, py::arg("pair"))
      .def("token_noise", &ToyModel::token_noise, py::arg("token"),
           py::arg("dim"))
      .def_static("tokenize", &ToyModel::tokenize, py::arg("pair"));

  py::class_<OverlapBaseline, ModelAdapter>(m, "OverlapBaseline")
      .def(py::init<>())
      .def_static("overlap_ratio", &OverlapBaseline::overlap_ratio,
                  py::arg("pair"))
      .def_static("tokenize", &OverlapBaseline::tokenize, py::arg("pair"));

  // ---- effects ----

  py::class_<OddsValue>(m, "OddsValue")
      .def(py::init<>())
      .def_readwrite("value", &OddsValue::value)
      .def_readwrite("p_non_entailment", &OddsValue::p_non_entailment)
      .def_readwrite("p_entailment", &OddsValue::p_entailment)
      .def_readwrite("clamped", &OddsValue::clamped);

  py::class_<EffectRecord>(m, "EffectRecord")
      .def(py::init<>())
      .def_readwrite("match_id", &EffectRecord::match_id)
      .def_readwrite("te", &EffectRecord::te)
      .def_readwrite("nie", &EffectRecord::nie)
      .def_readwrite("nde", &EffectRecord::nde)
      .def_readwrite("y_null", &EffectRecord::y_null)
      .def_readwrite("y_swap", &EffectRecord::y_swap)
      .def_readwrite("y_swap_m_null", &EffectRecord::y_swap_m_null)
      .def_readwrite("mediator", &EffectRecord::mediator)
      .def_readwrite("alignment", &EffectRecord::alignment)
      .def("any_clamped", &EffectRecord::any_clamped)
      .def("clamp_flags", &EffectRecord::clamp_flags);

  py::class_<EffectSummary>(m, "EffectSummary")
      .def(py::init<>())
      .def_readwrite("mean_te", &EffectSummary::mean_te)
      .def_readwrite("sd_te", &EffectSummary::sd_te)
      .def_readwrite("mean_nie", &EffectSummary::mean_nie)
      .def_readwrite("sd_nie", &EffectSummary::sd_nie)
      .def_readwrite("mean_nde", &EffectSummary::mean_nde)
      .def_readwrite("sd_nde", &EffectSummary::sd_nde)
      .def_readwrite("n", &EffectSummary::n)
      .def_readwrite("single_sample", &EffectSummary::single_sample);

  m.def("odds_non_entailment", &odds_non_entailment, py::arg("distribution"),
        py::arg("eps") = kOddsEpsilon);
  m.def("log_odds_ratio", &log_odds_ratio, py::arg("numerator"),
        py::arg("denominator"));
  m.def("require_swap_image", &require_swap_image, py::arg("control"),
        py::arg("intervention"));
  m.def("total_effect", &total_effect, py::arg("model"), py::arg("control"),
        py::arg("intervention"), py::arg("match_id"),
        py::call_guard<py::gil_scoped_release>());
  m.def("natural_indirect_effect", &natural_indirect_effect, py::arg("model"),
        py::arg("control"), py::arg("intervention"), py::arg("match_id"),
        py::arg("spec"), py::arg("alignment") = Alignment::min_length,
        py::call_guard<py::gil_scoped_release>());
  m.def("mean_effects", &mean_effects, py::arg("records"));
  m.def("effect_records_csv", &effect_records_csv, py::arg("records"));
  m.def("effect_records_jsonl", &effect_records_jsonl, py::arg("records"));
  m.def("format_double", &format_double, py::arg("v"));

  // ---- analysis ----

  py::class_<NeuronEffect>(m, "NeuronEffect")
      .def(py::init<>())
      .def_readwrite("coord", &NeuronEffect::coord)
      .def_readwrite("mean_nie", &NeuronEffect::mean_nie)
      .def_readwrite("sd_nie", &NeuronEffect::sd_nie)
      .def_readwrite("n", &NeuronEffect::n)
      .def_readwrite("n_clamped", &NeuronEffect::n_clamped);

  py::class_<NeuronEffectTable>(m, "NeuronEffectTable")
      .def(py::init<>())
      .def_readwrite("model_name", &NeuronEffectTable::model_name)
      .def_readwrite("n_layers", &NeuronEffectTable::n_layers)
      .def_readwrite("hidden_size", &NeuronEffectTable::hidden_size)
      .def_readwrite("entries", &NeuronEffectTable::entries);

  py::class_<SweepOptions>(m, "SweepOptions")
      .def(py::init<>())
      .def_readwrite("coords", &SweepOptions::coords)
      .def_readwrite("alignment", &SweepOptions::alignment)
      .def_readwrite("jobs", &SweepOptions::jobs)
      .def_readwrite("checkpoint_path", &SweepOptions::checkpoint_path)
      .def_readwrite("checkpoint_every", &SweepOptions::checkpoint_every)
      .def_readwrite("resume", &SweepOptions::resume)
      .def_readwrite("max_coords_this_run", &SweepOptions::max_coords_this_run);

  py::class_<LayerSummary>(m, "LayerSummary")
      .def(py::init<>())
      .def_readwrite("layer", &LayerSummary::layer)
      .def_readwrite("depth", &LayerSummary::depth)
      .def_readwrite("group", &LayerSummary::group)
      .def_readwrite("selected_coords", &LayerSummary::selected_coords)
      .def_readwrite("mean_nie", &LayerSummary::mean_nie)
      .def_readwrite("sd_nie", &LayerSummary::sd_nie)
      .def_readwrite("n", &LayerSummary::n);

  py::class_<GroupAccuracy>(m, "GroupAccuracy")
      .def(py::init<>())
      .def_readwrite("control_pct", &GroupAccuracy::control_pct)
      .def_readwrite("intervention_pct", &GroupAccuracy::intervention_pct)
      .def_readwrite("control_correct", &GroupAccuracy::control_correct)
      .def_readwrite("control_total", &GroupAccuracy::control_total)
      .def_readwrite("intervention_correct", &GroupAccuracy::intervention_correct)
      .def_readwrite("intervention_total", &GroupAccuracy::intervention_total);

  m.def("neuron_sweep", &neuron_sweep, py::arg("model"), py::arg("dataset"),
        py::arg("options") = SweepOptions{},
        py::call_guard<py::gil_scoped_release>());
  m.def("top_k_selection", &top_k_selection, py::arg("table"),
        py::arg("fraction"));
  m.def("layer_depth", &layer_depth, py::arg("layer"), py::arg("n_layers"));
  m.def("depth_group", &depth_group, py::arg("depth"));
  m.def("layerwise_nie", &layerwise_nie, py::arg("model"), py::arg("dataset"),
        py::arg("selection"), py::arg("alignment") = Alignment::min_length,
        py::arg("mode") = LayerMode::joint,
        py::call_guard<py::gil_scoped_release>());
  m.def("group_accuracy", &group_accuracy, py::arg("model"), py::arg("dataset"),
        py::call_guard<py::gil_scoped_release>());

  // ---- report and pipeline ----

  py::class_<ReportBundleInputs>(m, "ReportBundleInputs")
      .def(py::init<>())
      .def_readwrite("model_name", &ReportBundleInputs::model_name)
      .def_readwrite("meta", &ReportBundleInputs::meta)
      .def_readwrite("te_records", &ReportBundleInputs::te_records)
      .def_readwrite("ttest", &ReportBundleInputs::ttest)
      .def_readwrite("neuron_table", &ReportBundleInputs::neuron_table)
      .def_readwrite("layer_summaries", &ReportBundleInputs::layer_summaries)
      .def_readwrite("layer_mode", &ReportBundleInputs::layer_mode)
      .def_readwrite("accuracy", &ReportBundleInputs::accuracy);

  m.def("emit_report", &emit_report, py::arg("inputs"), py::arg("out_dir"));
  m.def("neuron_table_csv", &neuron_table_csv, py::arg("table"));
  m.def("ttest_csv", &ttest_csv, py::arg("model_name"), py::arg("result"));
  m.def("accuracy_csv", &accuracy_csv, py::arg("model_name"), py::arg("acc"));

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("lexicon_path", &RunConfig::lexicon_path)
      .def_readwrite("dataset_path", &RunConfig::dataset_path)
      .def_readwrite("model", &RunConfig::model)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("pairs_per_group", &RunConfig::pairs_per_group)
      .def_readwrite("alignment", &RunConfig::alignment)
      .def_readwrite("alpha", &RunConfig::alpha)
      .def_readwrite("topk_fraction", &RunConfig::topk_fraction)
      .def_readwrite("out", &RunConfig::out)
      .def_readwrite("coords", &RunConfig::coords)
      .def_readwrite("jobs", &RunConfig::jobs)
      .def_readwrite("resume", &RunConfig::resume)
      .def_readwrite("checkpoint_every", &RunConfig::checkpoint_every)
      .def_readwrite("max_coords", &RunConfig::max_coords)
      .def_readwrite("layer_mode", &RunConfig::layer_mode)
      .def_readwrite("set_average", &RunConfig::set_average)
      .def("validate", &RunConfig::validate);

  m.def("parse_coords", &parse_coords, py::arg("raw"), py::arg("n_layers"),
        py::arg("hidden_size"));
  m.def("total_effect_records", &total_effect_records, py::arg("model"),
        py::arg("dataset"), py::arg("set_average") = false,
        py::call_guard<py::gil_scoped_release>());
  m.def("run_generate", &run_generate, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_te", &run_te, py::arg("config"), py::arg("model") = nullptr,
        py::call_guard<py::gil_scoped_release>());
  m.def("run_nie", &run_nie, py::arg("config"), py::arg("model") = nullptr,
        py::call_guard<py::gil_scoped_release>());
  m.def("run_report", &run_report, py::arg("config"), py::arg("model") = nullptr,
        py::call_guard<py::gil_scoped_release>());

  // ---- reference statistics ----

  py::class_<ReferenceModelStats>(m, "ReferenceModelStats")
      .def_readonly("name", &ReferenceModelStats::name)
      .def_readonly("mean_te", &ReferenceModelStats::mean_te)
      .def_readonly("sd_te", &ReferenceModelStats::sd_te)
      .def_readonly("n", &ReferenceModelStats::n)
      .def_readonly("t_reported", &ReferenceModelStats::t_reported)
      .def_readonly("p_bound", &ReferenceModelStats::p_bound)
      .def_readonly("p_value", &ReferenceModelStats::p_value)
      .def_readonly("n_parameters", &ReferenceModelStats::n_parameters)
      .def_readonly("vocab_size", &ReferenceModelStats::vocab_size);

  m.def("reference_models", [] {
    return std::vector<ReferenceModelStats>(
        kReferenceModelStats, kReferenceModelStats + kReferenceModelCount);
  });
  m.attr("REFERENCE_PARAMS_CORRELATION") = kReferenceParamsCorrelation;
}
