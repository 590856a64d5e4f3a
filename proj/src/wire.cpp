#include "aidetect/wire.hpp"

#include <istream>
#include <ostream>

#include <httplib.h>

#include "aidetect/errors.hpp"

namespace aidetect::wire {

namespace {

json models_json(const ProviderConfig& cfg) {
    json m;
    m["scoring"] = cfg.scoring_model;
    if (cfg.sampling_model) m["sampling"] = *cfg.sampling_model;
    return m;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

json encode_score_request(const ProviderConfig& cfg, std::string_view text) {
    json j;
    j["op"] = "score";
    j["models"] = models_json(cfg);
    j["text"] = std::string(text);
    j["params"] = json::object();
    return j;
}

json encode_generate_request(const ProviderConfig& cfg, const GenRequest& req) {
    json j;
    j["op"] = "generate";
    j["models"] = {{"generation", generation_model(cfg, req)}};
    j["prompt"] = req.prompt;
    json p;
    p["temperature"] = req.temperature;
    p["top_p"] = req.top_p;
    p["frequency_penalty"] = req.frequency_penalty;
    p["presence_penalty"] = req.presence_penalty;
    p["max_length"] = req.max_length;
    if (req.seed) p["seed"] = *req.seed;
    j["params"] = std::move(p);
    return j;
}

Call decode_request(const json& j) {
    try {
        const auto op = j.at("op").get<std::string>();
        const auto& models = j.at("models");
        if (op == "score") {
            ScoreCall call;
            call.cfg.scoring_model = models.at("scoring").get<std::string>();
            if (models.contains("sampling") && !models.at("sampling").is_null()) {
                call.cfg.sampling_model = models.at("sampling").get<std::string>();
            }
            call.text = j.at("text").get<std::string>();
            return call;
        }
        if (op == "generate") {
            GenerateCall call;
            const auto model = models.at("generation").get<std::string>();
            call.cfg.scoring_model = model;
            call.req.model = model;
            call.req.prompt = j.at("prompt").get<std::string>();
            const auto& p = j.at("params");
            call.req.temperature = p.at("temperature").get<double>();
            call.req.top_p = p.at("top_p").get<double>();
            call.req.frequency_penalty = p.at("frequency_penalty").get<double>();
            call.req.presence_penalty = p.at("presence_penalty").get<double>();
            call.req.max_length = p.at("max_length").get<std::size_t>();
            if (p.contains("seed") && !p.at("seed").is_null()) {
                call.req.seed = p.at("seed").get<std::uint64_t>();
            }
            return call;
        }
        throw InputError("unknown op '" + op + "'");
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed request: ") + e.what());
    }
}

json encode_positions(const std::vector<PositionStats>& stats) {
    json arr = json::array();
    for (const auto& s : stats) {
        json r;
        r["token_id"] = s.token_id;
        r["token_text"] = s.token_text;
        r["logprob"] = s.logprob;
        r["rank"] = s.rank;
        r["mean"] = optional_number(s.sampler_mean_logprob);
        r["var"] = optional_number(s.sampler_var_logprob);
        r["xent"] = optional_number(s.xent_term);
        arr.push_back(std::move(r));
    }
    return arr;
}

std::vector<PositionStats> decode_positions(const json& j) {
    if (!j.is_array()) throw TransportError("scoring response is not an array");
    std::vector<PositionStats> out;
    out.reserve(j.size());
    try {
        for (const auto& r : j) {
            PositionStats s;
            s.token_id = r.at("token_id").get<TokenId>();
            s.token_text = r.at("token_text").get<std::string>();
            s.logprob = r.at("logprob").get<double>();
            s.rank = r.at("rank").get<std::int64_t>();
            s.sampler_mean_logprob = read_optional(r, "mean");
            s.sampler_var_logprob = read_optional(r, "var");
            s.xent_term = read_optional(r, "xent");
            out.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed scoring response: ") + e.what());
    }
    return out;
}

json encode_result(const GenResult& r) {
    return {{"text", r.text}, {"finish_reason", r.finish_reason}};
}

GenResult decode_result(const json& j) {
    try {
        return {j.at("text").get<std::string>(), j.at("finish_reason").get<std::string>()};
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed generation response: ") + e.what());
    }
}

json encode_error(const std::exception& e) {
    json err;
    err["message"] = e.what();
    if (const auto* t = dynamic_cast<const TruncationError*>(&e)) {
        err["kind"] = "truncation";
        err["limit"] = t->limit();
    } else if (dynamic_cast<const ConfigError*>(&e)) {
        err["kind"] = "config";
    } else if (dynamic_cast<const GenerationError*>(&e)) {
        err["kind"] = "generation";
    } else if (const auto* a = dynamic_cast<const Error*>(&e);
               a && a->category() == ErrorCategory::Data) {
        err["kind"] = "input";
    } else {
        err["kind"] = "internal";
    }
    return {{"error", err}};
}

void throw_error(const json& j) {
    const auto& err = j.at("error");
    const auto kind = err.value("kind", "internal");
    const auto message = err.value("message", "unknown provider error");
    if (kind == "truncation") {
        const auto limit = err.value<std::size_t>("limit", 0);
        throw TruncationError(limit + 1, limit);
    }
    if (kind == "config") throw ConfigError(message);
    if (kind == "generation") throw GenerationError(message);
    if (kind == "input") throw InputError(message);
    throw TransportError("provider failure: " + message);
}

std::string handle(Provider& provider, std::string_view body, int& status) {
    try {
        const auto call = decode_request(json::parse(body));
        status = 200;
        if (const auto* s = std::get_if<ScoreCall>(&call)) {
            return encode_positions(provider.score_text(s->cfg, s->text)).dump();
        }
        const auto& g = std::get<GenerateCall>(call);
        return encode_result(provider.generate(g.cfg, g.req)).dump();
    } catch (const json::exception& e) {
        status = 400;
        return encode_error(InputError(std::string("malformed request: ") + e.what())).dump();
    } catch (const std::exception& e) {
        const auto rec = encode_error(e);
        status = rec["error"]["kind"] == "internal" ? 500 : 422;
        return rec.dump();
    }
}

void serve_pipe(Provider& provider, std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int status = 0;
        out << handle(provider, line, status) << '\n';
        out.flush();
    }
}

Server::Server(Provider& provider, std::string path, std::string bearer_token)
    : provider_(provider),
      path_(std::move(path)),
      token_(std::move(bearer_token)),
      server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

Server::~Server() { stop(); }

void Server::install_routes() {
    server_->Post(path_, [this](const httplib::Request& req, httplib::Response& res) {
        if (!token_.empty() && req.get_header_value("Authorization") != "Bearer " + token_) {
            res.status = 401;
            res.set_content(
                encode_error(ConfigError("missing or invalid credentials")).dump(),
                "application/json");
            return;
        }
        int status = 200;
        auto body = handle(provider_, req.body, status);
        res.status = status;
        res.set_content(body, "application/json");
    });
}

int Server::start(int port) {
    if (port == 0) {
        port_ = server_->bind_to_any_port("127.0.0.1");
    } else if (server_->bind_to_port("127.0.0.1", port)) {
        port_ = port;
    } else {
        port_ = -1;
    }
    if (port_ <= 0) throw TransportError("cannot bind provider server");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void Server::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string Server::endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + path_;
}

void Server::listen_blocking(const std::string& host, int port) {
    if (!server_->listen(host, port)) {
        throw TransportError("cannot listen on " + host + ":" + std::to_string(port));
    }
}

}  // namespace aidetect::wire
