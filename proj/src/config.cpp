#include "adns/config.hpp"

#include "adns/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace adns {

using nlohmann::ordered_json;

Method parse_method(const std::string& name) {
    if (name == "Vanilla") return Method::Vanilla;
    if (name == "PureNullSpace") return Method::PureNullSpace;
    if (name == "AdNS") return Method::AdNS;
    if (name == "AdNSRandomMerge") return Method::AdNSRandomMerge;
    throw ValidationError("unknown method '" + name + "'");
}

RankStrategy parse_rank_strategy(const std::string& name) {
    if (name == "Max") return RankStrategy::Max;
    if (name == "Avg") return RankStrategy::Avg;
    if (name == "Min") return RankStrategy::Min;
    throw ValidationError("unknown rank strategy '" + name + "'");
}

Optimizer parse_optimizer(const std::string& name) {
    if (name == "SGD") return Optimizer::SGD;
    if (name == "AdamProjected") return Optimizer::AdamProjected;
    throw ValidationError("unknown optimizer '" + name + "'");
}

StreamGenerator parse_generator(const std::string& name) {
    if (name == "SplitGaussians") return StreamGenerator::SplitGaussians;
    if (name == "RotatedGaussians") return StreamGenerator::RotatedGaussians;
    if (name == "CsvSplit") return StreamGenerator::CsvSplit;
    throw ValidationError("unknown stream generator '" + name + "'");
}

std::string to_string(StreamGenerator g) {
    switch (g) {
        case StreamGenerator::SplitGaussians: return "SplitGaussians";
        case StreamGenerator::RotatedGaussians: return "RotatedGaussians";
        case StreamGenerator::CsvSplit: return "CsvSplit";
    }
    return "?";
}

Activation parse_activation(const std::string& name) {
    if (name == "ReLU") return Activation::ReLU;
    if (name == "Identity") return Activation::Identity;
    throw ValidationError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) { return a == Activation::ReLU ? "ReLU" : "Identity"; }

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first == std::string::npos) throw ConfigError("seeds", "empty entry in seed list");
        item = item.substr(first, last - first + 1);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            if (item.front() == '-') throw std::invalid_argument("negative");
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("seeds", "'" + item + "' is not a non-negative integer");
        }
        if (used != item.size()) throw ConfigError("seeds", "'" + item + "' is not a non-negative integer");
        seeds.push_back(v);
    }
    if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    return seeds;
}

namespace {

// Walks one JSON object, records which keys were consumed and rejects the rest.
class Section {
  public:
    Section(const ordered_json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

    bool has(const std::string& name) {
        seen_.insert(name);
        return node_.contains(name);
    }

    const ordered_json& raw(const std::string& name) {
        seen_.insert(name);
        return node_.at(name);
    }

    Section child(const std::string& name) { return Section(raw(name), key(name)); }

    double number(const std::string& name, double fallback) {
        if (!has(name)) return fallback;
        const ordered_json& v = node_.at(name);
        if (!v.is_number()) throw ConfigError(key(name), "expected a number");
        return v.get<double>();
    }

    std::size_t count(const std::string& name, std::size_t fallback) {
        if (!has(name)) return fallback;
        return to_count(node_.at(name), key(name));
    }

    bool flag(const std::string& name, bool fallback) {
        if (!has(name)) return fallback;
        const ordered_json& v = node_.at(name);
        if (!v.is_boolean()) throw ConfigError(key(name), "expected true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& name, const std::string& fallback) {
        if (!has(name)) return fallback;
        const ordered_json& v = node_.at(name);
        if (!v.is_string()) throw ConfigError(key(name), "expected a string");
        return v.get<std::string>();
    }

    template <class T, class Parse>
    T choice(const std::string& name, T fallback, Parse parse) {
        if (!has(name)) return fallback;
        const std::string s = text(name, "");
        try {
            return parse(s);
        } catch (const ValidationError& e) {
            throw ConfigError(key(name), e.what());
        }
    }

    std::vector<std::size_t> counts(const std::string& name, std::vector<std::size_t> fallback) {
        if (!has(name)) return fallback;
        const ordered_json& v = node_.at(name);
        if (!v.is_array()) throw ConfigError(key(name), "expected an array of counts");
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(to_count(v[i], key(name) + "[" + std::to_string(i) + "]"));
        return out;
    }

    std::vector<std::uint64_t> seeds(const std::string& name, std::vector<std::uint64_t> fallback) {
        if (!has(name)) return fallback;
        const ordered_json& v = node_.at(name);
        if (!v.is_array()) throw ConfigError(key(name), "expected an array of seeds");
        std::vector<std::uint64_t> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            out.push_back(to_count(v[i], key(name) + "[" + std::to_string(i) + "]"));
        }
        if (out.empty()) throw ConfigError(key(name), "at least one seed is required");
        return out;
    }

    void finish() const {
        for (const auto& [k, _] : node_.items()) {
            if (!seen_.count(k)) throw ConfigError(key(k), "unknown key");
        }
    }

  private:
    static std::size_t to_count(const ordered_json& v, const std::string& key) {
        if (v.is_number_unsigned()) return v.get<std::size_t>();
        if (v.is_number_integer()) {
            if (v.get<long long>() < 0) throw ConfigError(key, "expected a non-negative integer");
            return static_cast<std::size_t>(v.get<long long>());
        }
        throw ConfigError(key, "expected a non-negative integer");
    }

    const ordered_json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_csv_options(Section s, StreamSpec& stream) {
    stream.csv_path = s.text("path", stream.csv_path);
    if (s.has("label_column")) {
        const ordered_json& v = s.raw("label_column");
        if (v.is_string()) stream.csv.label_column = v.get<std::string>();
        else if (v.is_number_unsigned()) stream.csv.label_column = v.get<std::size_t>();
        else throw ConfigError(s.key("label_column"), "expected a column name or a zero-based index");
    }
    stream.csv.header = s.flag("header", stream.csv.header);
    stream.csv.normalize = s.flag("normalize", stream.csv.normalize);
    s.finish();
}

StreamSpec read_stream(Section s) {
    StreamSpec st;
    st.generator = s.choice("generator", st.generator, parse_generator);
    st.tasks = s.count("tasks", st.tasks);
    st.classes_per_task = s.count("classes_per_task", st.classes_per_task);
    st.dim = s.count("dim", st.dim);
    st.samples_per_class = s.count("samples_per_class", st.samples_per_class);
    st.noise_sigma = s.number("noise_sigma", st.noise_sigma);
    st.train_fraction = s.number("train_fraction", st.train_fraction);
    if (s.has("csv")) read_csv_options(s.child("csv"), st);
    s.finish();

    if (st.tasks < 1) throw ConfigError(s.key("tasks"), "must be >= 1");
    if (st.noise_sigma < 0.0) throw ConfigError(s.key("noise_sigma"), "must be >= 0");
    if (!(st.train_fraction > 0.0 && st.train_fraction < 1.0)) {
        throw ConfigError(s.key("train_fraction"), "must be in (0, 1)");
    }
    if (st.generator == StreamGenerator::CsvSplit && st.csv_path.empty()) {
        throw ConfigError(s.key("csv.path"), "required for the CsvSplit generator");
    }
    try {
        st.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(s.key(""), e.what());
    }
    return st;
}

ModelConfig read_model(Section s, ModelConfig m) {
    m.hidden = s.counts("hidden", m.hidden);
    for (std::size_t w : m.hidden)
        if (w == 0) throw ConfigError(s.key("hidden"), "widths must be >= 1");
    m.activation = s.choice("activation", m.activation, parse_activation);
    m.use_bias = s.flag("use_bias", m.use_bias);
    s.finish();
    return m;
}

TrainerConfig read_trainer(Section s) {
    TrainerConfig t;
    t.method = s.choice("method", t.method, parse_method);
    t.learning_rate = s.number("learning_rate", t.learning_rate);
    if (s.has("first_task_learning_rate")) t.first_task_learning_rate = s.number("first_task_learning_rate", 0.0);
    t.lr_milestones = s.counts("lr_milestones", t.lr_milestones);
    t.lr_decay = s.number("lr_decay", t.lr_decay);
    t.epochs = s.count("epochs", t.epochs);
    t.batch_size = s.count("batch_size", t.batch_size);
    t.beta = s.number("beta", t.beta);
    t.tau = s.number("tau", t.tau);
    t.schedule.alpha_max = s.number("alpha_max", t.schedule.alpha_max);
    t.schedule.alpha_min = s.number("alpha_min", t.schedule.alpha_min);
    t.rank_policy.strategy = s.choice("rank_strategy", t.rank_policy.strategy, parse_rank_strategy);
    t.rank_policy.k0 = s.number("k0", t.rank_policy.k0);
    t.optimizer = s.choice("optimizer", t.optimizer, parse_optimizer);
    if (s.has("adam")) {
        Section a = s.child("adam");
        t.adam_beta1 = a.number("beta1", t.adam_beta1);
        t.adam_beta2 = a.number("beta2", t.adam_beta2);
        t.adam_epsilon = a.number("epsilon", t.adam_epsilon);
        a.finish();
    }
    t.distill_epochs = s.count("distill_epochs", t.distill_epochs);
    if (s.has("distill_learning_rate")) t.distill_learning_rate = s.number("distill_learning_rate", 0.0);
    t.warm_start_head = s.flag("warm_start_head", t.warm_start_head);
    if (s.has("model")) t.model = read_model(s.child("model"), t.model);
    s.finish();

    // Checks that name their key; the remaining invariants are covered by validate().
    if (!(t.learning_rate > 0.0)) throw ConfigError(s.key("learning_rate"), "must be > 0");
    if (t.first_task_learning_rate && !(*t.first_task_learning_rate > 0.0)) {
        throw ConfigError(s.key("first_task_learning_rate"), "must be > 0");
    }
    if (t.epochs < 1) throw ConfigError(s.key("epochs"), "must be >= 1");
    if (t.batch_size < 1) throw ConfigError(s.key("batch_size"), "must be >= 1");
    if (t.beta < 0.0) throw ConfigError(s.key("beta"), "must be >= 0");
    if (!(t.tau > 0.0)) throw ConfigError(s.key("tau"), "must be > 0");
    if (t.schedule.alpha_min < 1.0) throw ConfigError(s.key("alpha_min"), "must be >= 1");
    if (t.schedule.alpha_min > t.schedule.alpha_max) {
        throw ConfigError(s.key("alpha_min"), "must not exceed alpha_max");
    }
    if (!(t.rank_policy.k0 > 0.0 && t.rank_policy.k0 <= 1.0)) throw ConfigError(s.key("k0"), "must be in (0, 1]");
    if (t.method == Method::Vanilla && t.beta > 0.0) {
        throw ConfigError(s.key("beta"), "distillation requires a null-space method, not Vanilla");
    }
    if (t.distill_learning_rate && !(*t.distill_learning_rate > 0.0)) {
        throw ConfigError(s.key("distill_learning_rate"), "must be > 0");
    }
    try {
        t.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(s.key(""), e.what());
    }
    return t;
}

QuadraticTestbedConfig read_testbed(Section& s) {
    QuadraticTestbedConfig q;
    q.block_dims = s.counts("block_dims", q.block_dims);
    q.outputs = s.count("outputs", q.outputs);
    q.old_samples = s.count("old_samples", q.old_samples);
    q.current_samples = s.count("current_samples", q.current_samples);
    q.old_rank = s.count("old_rank", q.old_rank);
    q.steps = s.count("steps", q.steps);
    q.eta_scale = s.number("eta_scale", q.eta_scale);
    q.alpha = s.number("alpha", q.alpha);
    q.zero_rank_projector = s.flag("zero_rank_projector", q.zero_rank_projector);
    q.full_rank_projector = s.flag("full_rank_projector", q.full_rank_projector);
    q.old_feature_decay = s.number("old_feature_decay", q.old_feature_decay);
    return q;
}

std::vector<std::uint64_t> default_verify_seeds() {
    std::vector<std::uint64_t> s;
    for (std::uint64_t i = 0; i < 20; ++i) s.push_back(i);
    return s;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    if (output.path.empty()) throw ConfigError("output.path", "must be a non-empty string");
    if (checkpoint && checkpoint->empty()) throw ConfigError("checkpoint", "must be a non-empty string");
    if (epoch_log && epoch_log->empty()) throw ConfigError("epoch_log", "must be a non-empty string");
    if (parallel < 1) throw ConfigError("parallel", "must be >= 1");
    if (sweep) {
        static const std::set<std::string> axes{"k0", "alpha", "beta", "method"};
        if (!axes.count(sweep->axis)) {
            throw ConfigError("sweep.axis", "unknown axis '" + sweep->axis + "' (expected k0, alpha, beta or method)");
        }
        if (sweep->values.empty()) throw ConfigError("sweep.values", "must list at least one value");
    }
    try {
        stream.validate();
    } catch (const ValidationError& e) {
        throw ConfigError("stream", e.what());
    }
    try {
        trainer.validate();
    } catch (const ValidationError& e) {
        throw ConfigError("trainer", e.what());
    }
    try {
        verify.testbed.validate();
    } catch (const ValidationError& e) {
        throw ConfigError("verify", e.what());
    }
    if (verify.seeds.empty()) throw ConfigError("verify.seeds", "at least one seed is required");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    cfg.verify.seeds = default_verify_seeds();
    Section root(doc, "");
    if (!root.has("stream")) throw ConfigError("stream", "required section is missing");
    if (!root.has("trainer")) throw ConfigError("trainer", "required section is missing");
    cfg.stream = read_stream(root.child("stream"));
    cfg.trainer = read_trainer(root.child("trainer"));
    cfg.seeds = root.seeds("seeds", cfg.seeds);
    if (root.has("output")) {
        Section o = root.child("output");
        cfg.output.path = o.text("path", cfg.output.path);
        cfg.output.format = o.choice("format", cfg.output.format, parse_result_format);
        o.finish();
    }
    if (root.has("checkpoint")) cfg.checkpoint = root.text("checkpoint", "");
    if (root.has("epoch_log")) cfg.epoch_log = root.text("epoch_log", "");
    if (root.has("sweep")) {
        Section s = root.child("sweep");
        SweepSpec sw;
        sw.axis = s.text("axis", "");
        if (s.has("values")) {
            const ordered_json& v = s.raw("values");
            if (!v.is_array()) throw ConfigError(s.key("values"), "expected an array");
            for (const ordered_json& e : v) {
                if (e.is_string()) sw.values.push_back(e.get<std::string>());
                else if (e.is_number()) sw.values.push_back(e.dump());
                else throw ConfigError(s.key("values"), "entries must be numbers or strings");
            }
        }
        s.finish();
        cfg.sweep = sw;
    }
    if (root.has("verify")) {
        Section v = root.child("verify");
        cfg.verify.testbed = read_testbed(v);
        cfg.verify.seeds = v.seeds("seeds", cfg.verify.seeds);
        v.finish();
    }
    cfg.parallel = root.count("parallel", cfg.parallel);
    root.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    ordered_json j;
    ordered_json st;
    st["generator"] = to_string(c.stream.generator);
    st["tasks"] = c.stream.tasks;
    st["classes_per_task"] = c.stream.classes_per_task;
    st["dim"] = c.stream.dim;
    st["samples_per_class"] = c.stream.samples_per_class;
    st["noise_sigma"] = c.stream.noise_sigma;
    st["train_fraction"] = c.stream.train_fraction;
    if (c.stream.generator == StreamGenerator::CsvSplit) {
        ordered_json csv;
        csv["path"] = c.stream.csv_path;
        if (const auto* name = std::get_if<std::string>(&c.stream.csv.label_column)) csv["label_column"] = *name;
        else csv["label_column"] = std::get<std::size_t>(c.stream.csv.label_column);
        csv["header"] = c.stream.csv.header;
        csv["normalize"] = c.stream.csv.normalize;
        st["csv"] = csv;
    }
    j["stream"] = st;

    const TrainerConfig& t = c.trainer;
    ordered_json tr;
    tr["method"] = to_string(t.method);
    tr["learning_rate"] = t.learning_rate;
    if (t.first_task_learning_rate) tr["first_task_learning_rate"] = *t.first_task_learning_rate;
    tr["lr_milestones"] = t.lr_milestones;
    tr["lr_decay"] = t.lr_decay;
    tr["epochs"] = t.epochs;
    tr["batch_size"] = t.batch_size;
    tr["beta"] = t.beta;
    tr["tau"] = t.tau;
    tr["alpha_max"] = t.schedule.alpha_max;
    tr["alpha_min"] = t.schedule.alpha_min;
    tr["rank_strategy"] = to_string(t.rank_policy.strategy);
    tr["k0"] = t.rank_policy.k0;
    tr["optimizer"] = to_string(t.optimizer);
    tr["adam"] = {{"beta1", t.adam_beta1}, {"beta2", t.adam_beta2}, {"epsilon", t.adam_epsilon}};
    tr["distill_epochs"] = t.distill_epochs;
    if (t.distill_learning_rate) tr["distill_learning_rate"] = *t.distill_learning_rate;
    tr["warm_start_head"] = t.warm_start_head;
    tr["model"] = {{"hidden", t.model.hidden},
                   {"activation", to_string(t.model.activation)},
                   {"use_bias", t.model.use_bias}};
    j["trainer"] = tr;
    j["seeds"] = c.seeds;
    j["output"] = {{"path", c.output.path}, {"format", to_string(c.output.format)}};
    if (c.checkpoint) j["checkpoint"] = *c.checkpoint;
    if (c.epoch_log) j["epoch_log"] = *c.epoch_log;
    if (c.sweep) j["sweep"] = {{"axis", c.sweep->axis}, {"values", c.sweep->values}};
    const QuadraticTestbedConfig& q = c.verify.testbed;
    j["verify"] = {{"block_dims", q.block_dims},
                   {"outputs", q.outputs},
                   {"old_samples", q.old_samples},
                   {"current_samples", q.current_samples},
                   {"old_rank", q.old_rank},
                   {"steps", q.steps},
                   {"eta_scale", q.eta_scale},
                   {"alpha", q.alpha},
                   {"zero_rank_projector", q.zero_rank_projector},
                   {"full_rank_projector", q.full_rank_projector},
                   {"old_feature_decay", q.old_feature_decay},
                   {"seeds", c.verify.seeds}};
    j["parallel"] = c.parallel;
    return j.dump(2) + "\n";
}

ExperimentConfig standard_suite_config() {
    ExperimentConfig c;
    c.stream.generator = StreamGenerator::SplitGaussians;
    c.stream.tasks = 5;
    c.stream.classes_per_task = 2;
    c.stream.dim = 32;
    c.stream.samples_per_class = 200;
    c.stream.noise_sigma = 2.0;

    TrainerConfig& t = c.trainer;
    t.method = Method::AdNS;
    t.optimizer = Optimizer::AdamProjected;
    t.learning_rate = 0.03;
    t.epochs = 5;
    t.batch_size = 8;
    t.schedule.alpha_max = 10.0;
    t.schedule.alpha_min = 10.0;
    // Narrow, bias-free backbone: every backbone parameter sits under projection
    // and the limited width makes an unprotected learner forget.
    t.model.hidden = {16, 16};
    t.model.use_bias = false;

    c.seeds = {0, 1, 2};
    c.verify.seeds = default_verify_seeds();
    return c;
}

std::vector<double> standard_suite_alpha_levels() { return {2.0, 10.0, 100.0}; }

}  // namespace adns
