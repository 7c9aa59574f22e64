#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvad/model.hpp"
#include "mvad/optim.hpp"

namespace mvad::training {

enum class OptimizerKind { adam, sgd };

inline OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "adam") return OptimizerKind::adam;
    if (s == "sgd") return OptimizerKind::sgd;
    throw std::invalid_argument("optimizer must be 'adam' or 'sgd', got '" + s + "'");
}

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

struct TrainConfig {
    std::size_t epochs = 300;
    double lr = 5e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    decoders::LossConfig loss;
    std::uint64_t seed = 42;
    std::size_t pretrain_ae_epochs = 0;
    // Architecture template; node count and view dims are taken from the graph.
    Architecture arch;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be > 0, got " + std::to_string(lr));
        loss.validate();
    }

    /// The architecture specialised to a graph's size and views.
    Architecture architecture_for(const MultiViewGraph& g) const {
        Architecture a = arch;
        a.nodes = g.node_count();
        a.view_dims = g.view_dims();
        if (a.fusion == fusion::FusionMode::weighted && a.weights.alphas.empty() && !a.learn_fusion_weights) {
            a.weights = fusion::AggregationWeights::uniform(a.view_count());
        }
        a.validate();
        return a;
    }
};

struct EpochRecord {
    double total = 0.0;
    double structure = 0.0;  // (1 − λ)‖A − Ã‖²_F
    double attribute = 0.0;  // λ‖X − X̃‖²_F
    double autoencoder = 0.0;  // γ‖B − B̂‖²_F

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Loss components evaluated at the start of each epoch, before its update.
using TrainHistory = std::vector<EpochRecord>;

class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, std::size_t epoch, std::optional<double> last_finite)
        : std::runtime_error(what), epoch_(epoch), last_finite_(last_finite) {}
    std::size_t epoch() const noexcept { return epoch_; }
    std::optional<double> last_finite_loss() const noexcept { return last_finite_; }

private:
    std::size_t epoch_;
    std::optional<double> last_finite_;
};

struct TrainResult {
    ModelParams params;
    TrainHistory history;
};

namespace detail {
inline void apply_step(ParamSet& values, const ad::Gradients& grads, const TrainConfig& cfg,
                       AdamState& state) {
    if (cfg.optimizer == OptimizerKind::adam) {
        adam_step(values, grads, {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps}, state);
    } else {
        sgd_step(values, grads, cfg.lr);
    }
}

[[noreturn]] inline void fail_epoch(const char* phase, std::size_t epoch, std::optional<double> last,
                                    const std::string& detail) {
    std::string msg = std::string(phase) + " diverged at epoch " + std::to_string(epoch) + ": " + detail;
    msg += last ? "; last finite loss " + std::to_string(*last) : "; no finite loss recorded";
    throw TrainingError(msg, epoch, last);
}

/// Optimizes ‖B − B̂‖²_F over the autoencoder parameters only.
inline void pretrain_autoencoder(const GraphTensors& in, ModelParams& model, const TrainConfig& cfg) {
    ParamSet ae;
    for (const auto& [name, value] : model.values)
        if (name.rfind("ae.", 0) == 0) ae.add(name, value);
    AdamState state;
    std::optional<double> last;
    for (std::size_t epoch = 1; epoch <= cfg.pretrain_ae_epochs; ++epoch) {
        ad::Tape tape;
        std::vector<encoders::DenseVars> enc, dec;
        for (std::size_t l = 0; l < model.arch.ae_hidden.size(); ++l) {
            enc.push_back({tape.parameter(Architecture::ae_name("enc", l, "weight"), ae.at(Architecture::ae_name("enc", l, "weight"))),
                           tape.parameter(Architecture::ae_name("enc", l, "bias"), ae.at(Architecture::ae_name("enc", l, "bias")))});
        }
        for (std::size_t l = 0; l < model.arch.ae_hidden.size(); ++l) {
            dec.push_back({tape.parameter(Architecture::ae_name("dec", l, "weight"), ae.at(Architecture::ae_name("dec", l, "weight"))),
                           tape.parameter(Architecture::ae_name("dec", l, "bias"), ae.at(Architecture::ae_name("dec", l, "bias")))});
        }
        try {
            const ad::Var b = tape.constant(in.modularity);
            const ad::Var loss = encoders::ae_loss(b, encoders::ae_decode(encoders::ae_encode(b, enc), dec));
            last = loss.value()(0, 0);
            apply_step(ae, tape.backward(loss), cfg, state);
        } catch (const std::domain_error& e) {
            fail_epoch("autoencoder pre-training", epoch, last, e.what());
        }
    }
    for (const auto& [name, value] : ae) model.values.at(name) = value;
}
}  // namespace detail

/// Full-batch minimization of (1−λ)‖A−Ã‖²_F + λ‖X−X̃‖²_F + γ‖B−B̂‖²_F.
inline TrainResult train(const MultiViewGraph& g, const TrainConfig& cfg) {
    cfg.validate();
    const GraphTensors in = GraphTensors::from(g);
    ModelParams model = init_params(cfg.architecture_for(g), cfg.loss, cfg.seed);
    if (cfg.pretrain_ae_epochs > 0 && cfg.loss.gamma > 0.0) detail::pretrain_autoencoder(in, model, cfg);

    TrainHistory history;
    history.reserve(cfg.epochs);
    AdamState state;
    std::optional<double> last;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        ad::Tape tape;
        try {
            const ForwardPass f = forward(tape, in, model);
            const EpochRecord rec{f.total.value()(0, 0), f.structure_term.value()(0, 0),
                                  f.attribute_term.value()(0, 0), f.ae_term.value()(0, 0)};
            if (!std::isfinite(rec.total)) detail::fail_epoch("training", epoch, last, "non-finite loss");
            history.push_back(rec);
            last = rec.total;
            detail::apply_step(model.values, tape.backward(f.total), cfg, state);
        } catch (const std::domain_error& e) {
            detail::fail_epoch("training", epoch, last, e.what());
        }
        for (const auto& [name, value] : model.values)
            if (!value.all_finite()) detail::fail_epoch("training", epoch, last, "parameter '" + name + "' became non-finite");
    }
    return {std::move(model), std::move(history)};
}

// ---------------------------------------------------------------------------
// Checkpoints.
//
// Layout (all integers little-endian):
//   bytes 0..7    magic "MVADCKPT"
//   bytes 8..15   u64 length H of the JSON header
//   next H bytes  UTF-8 JSON header: format version, architecture, loss
//                 weights, optional training-config echo, and the parameter
//                 list [{name, rows, cols}] in storage order
//   remainder     for each parameter in header order, rows·cols IEEE-754
//                 binary64 values, row-major, little-endian

inline constexpr char kCheckpointMagic[8] = {'M', 'V', 'A', 'D', 'C', 'K', 'P', 'T'};
inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline nlohmann::ordered_json architecture_to_json(const Architecture& a) {
    nlohmann::ordered_json j;
    j["nodes"] = a.nodes;
    j["view_dims"] = a.view_dims;
    j["view_hidden"] = a.view_hidden;
    j["ae_hidden"] = a.ae_hidden;
    j["community_hidden"] = a.community_hidden;
    j["fusion"] = std::string(fusion::to_string(a.fusion));
    j["alphas"] = a.weights.alphas;
    j["beta"] = a.weights.beta;
    j["learn_fusion_weights"] = a.learn_fusion_weights;
    j["isolate_autoencoder"] = a.isolate_autoencoder;
    return j;
}

inline Architecture architecture_from_json(const nlohmann::json& j) {
    Architecture a;
    a.nodes = j.at("nodes").get<std::size_t>();
    a.view_dims = j.at("view_dims").get<std::vector<std::size_t>>();
    a.view_hidden = j.at("view_hidden").get<std::vector<std::size_t>>();
    a.ae_hidden = j.at("ae_hidden").get<std::vector<std::size_t>>();
    a.community_hidden = j.at("community_hidden").get<std::vector<std::size_t>>();
    a.fusion = fusion::parse_fusion_mode(j.at("fusion").get<std::string>());
    a.weights.alphas = j.at("alphas").get<std::vector<double>>();
    a.weights.beta = j.at("beta").get<double>();
    a.learn_fusion_weights = j.at("learn_fusion_weights").get<bool>();
    a.isolate_autoencoder = j.at("isolate_autoencoder").get<bool>();
    return a;
}

inline nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["epochs"] = c.epochs;
    j["lr"] = c.lr;
    j["optimizer"] = to_string(c.optimizer);
    j["lambda"] = c.loss.lambda;
    j["gamma"] = c.loss.gamma;
    j["seed"] = c.seed;
    j["pretrain_ae_epochs"] = c.pretrain_ae_epochs;
    return j;
}

inline void save_checkpoint(const ModelParams& p, const std::filesystem::path& path,
                            const TrainConfig* echo = nullptr) {
    nlohmann::ordered_json header;
    header["format"] = "mvad-checkpoint";
    header["version"] = kCheckpointVersion;
    header["architecture"] = architecture_to_json(p.arch);
    header["loss"] = {{"lambda", p.loss.lambda}, {"gamma", p.loss.gamma}};
    if (echo) header["train_config"] = train_config_to_json(*echo);
    auto& list = header["params"] = nlohmann::ordered_json::array();
    for (const auto& [name, m] : p.values) list.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    const std::string text = header.dump();

    std::string bytes(kCheckpointMagic, sizeof kCheckpointMagic);
    auto put_u64 = [&bytes](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    put_u64(text.size());
    bytes += text;
    for (const auto& [name, m] : p.values)
        for (double v : m.data()) put_u64(std::bit_cast<std::uint64_t>(v));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + path.string());
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string where = "checkpoint " + path.string();
    if (bytes.size() < 16 || bytes.compare(0, 8, std::string(kCheckpointMagic, 8)) != 0) {
        throw CheckpointError(where + ": not a checkpoint file (bad magic)");
    }
    std::size_t pos = 8;
    auto get_u64 = [&bytes, &pos]() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    };
    const std::uint64_t header_len = get_u64();
    if (header_len > bytes.size() - pos) throw CheckpointError(where + ": truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(where + ": malformed header: " + e.what());
    }
    pos += header_len;

    ModelParams p;
    std::vector<Architecture::Slot> layout;
    try {
        if (header.value("format", "") != "mvad-checkpoint") throw CheckpointError(where + ": unknown format");
        const int version = header.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw CheckpointError(where + ": version mismatch (file has " + std::to_string(version) +
                                  ", expected " + std::to_string(kCheckpointVersion) + ")");
        }
        p.arch = architecture_from_json(header.at("architecture"));
        p.loss.lambda = header.at("loss").at("lambda").get<double>();
        p.loss.gamma = header.at("loss").at("gamma").get<double>();
        p.loss.validate();
        layout = p.arch.layout();
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(where + ": invalid metadata: " + e.what());
    }

    const auto& list = header.at("params");
    if (!list.is_array() || list.size() != layout.size()) {
        throw CheckpointError(where + ": checkpoint shape mismatch: header lists " +
                              std::to_string(list.is_array() ? list.size() : 0) +
                              " parameters, architecture implies " + std::to_string(layout.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& e = list[i];
        const auto name = e.at("name").get<std::string>();
        const auto rows = e.at("rows").get<std::size_t>();
        const auto cols = e.at("cols").get<std::size_t>();
        if (name != layout[i].name || rows != layout[i].rows || cols != layout[i].cols) {
            throw CheckpointError(where + ": checkpoint shape mismatch at parameter " + std::to_string(i) +
                                  ": file has " + name + " " + Matrix::shape_string(rows, cols) +
                                  ", architecture expects " + layout[i].name + " " +
                                  Matrix::shape_string(layout[i].rows, layout[i].cols));
        }
    }
    std::size_t scalars = 0;
    for (const auto& s : layout) scalars += s.rows * s.cols;
    if (bytes.size() - pos != scalars * 8) {
        throw CheckpointError(where + ": checkpoint shape mismatch: payload has " +
                              std::to_string(bytes.size() - pos) + " bytes, expected " +
                              std::to_string(scalars * 8));
    }
    for (const auto& s : layout) {
        Matrix m(s.rows, s.cols);
        for (double& v : m.data()) v = std::bit_cast<double>(get_u64());
        if (!m.all_finite()) throw CheckpointError(where + ": parameter " + s.name + " has non-finite values");
        p.values.add(s.name, std::move(m));
    }
    return p;
}

}  // namespace mvad::training
