#pragma once
// Provider wire contract. Each request and response is a single JSON record,
// carried either as an HTTP POST body or as one line on a pipe.
//
// Request:
//   {"op": "score", "models": {"scoring": M, "sampling": S?}, "text": T, "params": {}}
//   {"op": "generate", "models": {"generation": M}, "prompt": P,
//    "params": {"temperature", "top_p", "frequency_penalty", "presence_penalty",
//               "max_length", "seed"?}}
// Response:
//   score    -> [{"token_id", "token_text", "logprob", "rank", "mean", "var", "xent"}, ...]
//              (moments are null when no sampling model is configured)
//   generate -> {"text": ..., "finish_reason": ...}
//   failure  -> {"error": {"kind": "config"|"input"|"truncation"|"generation"|"internal",
//                          "message": ..., "limit"?: n}}

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aidetect/provider.hpp"

namespace httplib {
class Server;
}

namespace aidetect::wire {

using json = nlohmann::json;

struct ScoreCall {
    ProviderConfig cfg;
    std::string text;
};

struct GenerateCall {
    ProviderConfig cfg;
    GenRequest req;
};

using Call = std::variant<ScoreCall, GenerateCall>;

json encode_score_request(const ProviderConfig& cfg, std::string_view text);
json encode_generate_request(const ProviderConfig& cfg, const GenRequest& req);
Call decode_request(const json& j);  // throws InputError on malformed records

json encode_positions(const std::vector<PositionStats>& stats);
std::vector<PositionStats> decode_positions(const json& j);

json encode_result(const GenResult& r);
GenResult decode_result(const json& j);

json encode_error(const std::exception& e);
// Rethrows the error described by an error record as the matching exception.
[[noreturn]] void throw_error(const json& j);

// Serves one request against `provider`. Never throws; failures are encoded
// as error records and `status` is set to an HTTP-style code.
std::string handle(Provider& provider, std::string_view body, int& status);

// Line-delimited loop: one request per input line, one response per output line.
void serve_pipe(Provider& provider, std::istream& in, std::ostream& out);

// HTTP front-end for a provider, bound to 127.0.0.1.
class Server {
public:
    Server(Provider& provider, std::string path = "/v1/llm", std::string bearer_token = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds (port 0 picks a free port) and starts serving on a background thread.
    int start(int port = 0);
    void stop();
    std::string endpoint() const;

    // Blocks serving on the calling thread.
    void listen_blocking(const std::string& host, int port);

private:
    void install_routes();

    Provider& provider_;
    std::string path_;
    std::string token_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace aidetect::wire
