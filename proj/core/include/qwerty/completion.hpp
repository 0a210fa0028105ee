#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qwerty {

// Prompt in, raw completion out. One call carries one batch; implementations
// must be safe to call from several threads.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;

  // Throws Error(kAnalyzerUnavailable) when the backend cannot answer.
  virtual std::vector<std::string> complete(std::span<const std::string> prompts) = 0;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

// "host:port"; throws kConfigError.
Endpoint parse_endpoint(std::string_view address);

// Talks to a local inference process over TCP. Each message is a 4-byte
// big-endian length followed by that many bytes of UTF-8; a batch reuses one
// connection and sends its prompts in order.
class TcpCompletionClient final : public CompletionClient {
 public:
  explicit TcpCompletionClient(Endpoint endpoint,
                               std::chrono::milliseconds timeout = std::chrono::seconds(60));

  std::vector<std::string> complete(std::span<const std::string> prompts) override;

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

// Frame helpers shared with test servers.
void write_frame(int fd, std::string_view payload);
std::string read_frame(int fd);

std::uint64_t fnv1a64(std::string_view data);
std::string text_hash(std::string_view text);  // 16 lowercase hex digits

// Canned completions keyed by text_hash() of the window text embedded in the
// prompt. Fixture file: a JSON object {"<hash>": "<raw completion>", ...};
// the optional key "*" is used for unmapped texts.
class MockCompletionClient final : public CompletionClient {
 public:
  explicit MockCompletionClient(std::map<std::string, std::string> completions);

  static std::unique_ptr<MockCompletionClient> from_file(const std::string& path);
  static std::unique_ptr<MockCompletionClient> from_json(std::string_view json);

  std::vector<std::string> complete(std::span<const std::string> prompts) override;

 private:
  std::map<std::string, std::string> completions_;
};

}  // namespace qwerty
