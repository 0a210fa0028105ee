#include "qwerty/completion.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qwerty/error.hpp"
#include "qwerty/prompt.hpp"

namespace qwerty {

namespace {

constexpr std::uint32_t kMaxFrame = 64u * 1024u * 1024u;

[[noreturn]] void unavailable(const std::string& what) {
  throw Error(ErrorCode::kAnalyzerUnavailable, "model endpoint: " + what);
}

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_;
};

void write_all(int fd, const char* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      unavailable(std::string("send failed: ") + std::strerror(errno));
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

void read_all(int fd, char* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::recv(fd, data, size, 0);
    if (n == 0) unavailable("connection closed");
    if (n < 0) {
      if (errno == EINTR) continue;
      unavailable(std::string("recv failed: ") + std::strerror(errno));
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

int connect_to(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string port = std::to_string(endpoint.port);
  if (const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &result); rc != 0) {
    unavailable("cannot resolve " + endpoint.host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) {
    unavailable("cannot connect to " + endpoint.host + ":" + port);
  }
  return fd;
}

}  // namespace

Endpoint parse_endpoint(std::string_view address) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == address.size()) {
    throw Error(ErrorCode::kConfigError, "model address must be host:port, got '" + std::string(address) + "'");
  }
  Endpoint e;
  e.host = std::string(address.substr(0, colon));
  unsigned port = 0;
  const auto digits = address.substr(colon + 1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || port == 0 || port > 65535) {
    throw Error(ErrorCode::kConfigError, "bad port in model address '" + std::string(address) + "'");
  }
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

void write_frame(int fd, std::string_view payload) {
  if (payload.size() > kMaxFrame) unavailable("frame too large");
  const auto n = static_cast<std::uint32_t>(payload.size());
  const std::array<char, 4> header = {static_cast<char>(n >> 24), static_cast<char>(n >> 16),
                                      static_cast<char>(n >> 8), static_cast<char>(n)};
  write_all(fd, header.data(), header.size());
  write_all(fd, payload.data(), payload.size());
}

std::string read_frame(int fd) {
  std::array<unsigned char, 4> header{};
  read_all(fd, reinterpret_cast<char*>(header.data()), header.size());
  const std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                          (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (n > kMaxFrame) unavailable("frame too large");
  std::string payload(n, '\0');
  read_all(fd, payload.data(), n);
  return payload;
}

TcpCompletionClient::TcpCompletionClient(Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

std::vector<std::string> TcpCompletionClient::complete(std::span<const std::string> prompts) {
  Socket sock(connect_to(endpoint_, timeout_));
  std::vector<std::string> out;
  out.reserve(prompts.size());
  for (const std::string& prompt : prompts) {
    write_frame(sock.fd(), prompt);
    out.push_back(read_frame(sock.fd()));
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string text_hash(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

MockCompletionClient::MockCompletionClient(std::map<std::string, std::string> completions)
    : completions_(std::move(completions)) {}

std::unique_ptr<MockCompletionClient> MockCompletionClient::from_json(std::string_view text) {
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kConfigError, "mock fixture must be a JSON object of hash -> completion");
  }
  std::map<std::string, std::string> completions;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::kConfigError, "mock fixture entry '" + key + "' is not a string");
    }
    completions.emplace(key, value.get<std::string>());
  }
  return std::make_unique<MockCompletionClient>(std::move(completions));
}

std::unique_ptr<MockCompletionClient> MockCompletionClient::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open mock fixture '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::vector<std::string> MockCompletionClient::complete(std::span<const std::string> prompts) {
  const std::string_view preamble = prompt_preamble();
  std::vector<std::string> out;
  out.reserve(prompts.size());
  for (const std::string& prompt : prompts) {
    std::string_view text = prompt;
    if (text.starts_with(preamble)) text.remove_prefix(preamble.size());
    auto it = completions_.find(text_hash(text));
    if (it == completions_.end()) it = completions_.find("*");
    if (it == completions_.end()) unavailable("mock fixture has no completion for " + text_hash(text));
    out.push_back(it->second);
  }
  return out;
}

}  // namespace qwerty
