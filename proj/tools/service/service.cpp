#include "service.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>

#include "ocugaze/dataset.hpp"
#include "ocugaze/error.hpp"

namespace ocugaze::service {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

constexpr std::string_view kStubIndex =
    "<!doctype html><title>ocugaze</title><p>ocugaze service. UI assets are not installed; "
    "connect a client to <code>/ws</code>.</p>\n";

struct TimedFrame {
  GrayFrame frame;
  double t_s = 0.0;
};

class WsSession;

// Live websocket clients; touched only on the I/O thread.
struct Clients {
  std::set<std::shared_ptr<WsSession>> sessions;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, Clients& clients, BoundedQueue<wire::Inbound>& inbound, std::size_t capacity)
      : ws_(std::move(socket)), clients_(clients), inbound_(inbound), capacity_(capacity) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

  void send(std::shared_ptr<const std::string> msg) {
    if (queue_.size() >= capacity_) queue_.pop_front();
    queue_.push_back(std::move(msg));
    if (!writing_ && open_) write_next();
  }

  void close() {
    if (!open_) return;
    open_ = false;
    beast::error_code ec;
    ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ec);
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    open_ = true;
    clients_.sessions.insert(shared_from_this());
    read();
    if (!queue_.empty()) write_next();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      open_ = false;
      clients_.sessions.erase(shared_from_this());
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        inbound_.push(wire::parse_inbound(line));
      } catch (const Error& e) {
        std::cerr << "ws: ignoring message: " << e.what() << "\n";
      }
    }
    read();
  }

  void write_next() {
    writing_ = true;
    current_ = queue_.front();
    queue_.pop_front();
    ws_.async_write(net::buffer(*current_), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      open_ = false;
      clients_.sessions.erase(shared_from_this());
      return;
    }
    if (!queue_.empty() && open_) write_next();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Clients& clients_;
  BoundedQueue<wire::Inbound>& inbound_;
  std::size_t capacity_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  std::shared_ptr<const std::string> current_;
  bool writing_ = false;
  bool open_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, const ServiceOptions& options, Clients& clients,
              BoundedQueue<wire::Inbound>& inbound)
      : stream_(std::move(socket)), options_(options), clients_(clients), inbound_(inbound) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), clients_, inbound_, options_.outbound_capacity)
            ->run(std::move(req_));
        return;
      }
      respond(error_response(http::status::not_found, "no websocket endpoint here\n"));
      return;
    }
    respond(handle());
  }

  http::response<http::string_body> error_response(http::status status, std::string_view body) {
    http::response<http::string_body> res{status, req_.version()};
    res.set(http::field::content_type, "text/plain");
    res.keep_alive(req_.keep_alive());
    res.body() = std::string(body);
    res.prepare_payload();
    return res;
  }

  http::response<http::string_body> handle() {
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      return error_response(http::status::method_not_allowed, "only GET and HEAD\n");
    }
    const std::string_view target(req_.target().data(), req_.target().size());
    std::string body;
    std::string_view type = "text/html";
    if (options_.static_dir.empty()) {
      if (target != "/" && target != "/index.html") return error_response(http::status::not_found, "not found\n");
      body = kStubIndex;
    } else {
      const auto path = resolve_static(options_.static_dir, target);
      if (!path) return error_response(http::status::bad_request, "bad path\n");
      std::ifstream in(*path, std::ios::binary);
      if (!in) return error_response(http::status::not_found, "not found\n");
      std::ostringstream buf;
      buf << in.rdbuf();
      body = buf.str();
      type = mime_type(*path);
    }
    http::response<http::string_body> res{http::status::ok, req_.version()};
    res.set(http::field::content_type, std::string(type));
    res.keep_alive(req_.keep_alive());
    const auto size = body.size();
    if (req_.method() != http::verb::head) res.body() = std::move(body);
    res.prepare_payload();
    if (req_.method() == http::verb::head) res.content_length(size);
    return res;
  }

  void respond(http::response<http::string_body>&& res) {
    auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!sp->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  const ServiceOptions& options_;
  Clients& clients_;
  BoundedQueue<wire::Inbound>& inbound_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string_view target) {
  if (target.empty() || target.front() != '/') return std::nullopt;
  if (const auto q = target.find_first_of("?#"); q != std::string_view::npos) target = target.substr(0, q);
  std::string rel(target.substr(1));
  if (rel.empty() || rel.back() == '/') rel += "index.html";
  if (rel.find('\\') != std::string::npos || rel.find('%') != std::string::npos) return std::nullopt;
  std::filesystem::path p(rel);
  for (const auto& part : p) {
    if (part == ".." || part == ".") return std::nullopt;
  }
  if (p.is_absolute()) return std::nullopt;
  return root / p;
}

std::string_view mime_type(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".txt") return "text/plain";
  return "application/octet-stream";
}

struct Service::Impl {
  ServiceOptions options;
  Pipeline pipeline;
  std::unique_ptr<FrameSource> source;
  SessionController session;
  std::atomic<std::uint64_t>& sent;

  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  Clients clients;

  BoundedQueue<TimedFrame> frames{2};
  BoundedQueue<wire::Inbound> inbound{64};
  BoundedQueue<std::string> outbound{1024};

  std::function<void(std::optional<GazeClass>)> target_observer;
  std::atomic<bool> running{false};
  std::thread io_thread;
  std::thread capture_thread;
  std::thread worker_thread;
  std::thread pump_thread;
  Clock::time_point epoch = Clock::now();

  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool stopped = false;

  Impl(ServiceOptions o, Pipeline p, std::unique_ptr<FrameSource> s, SessionConfig sc, std::atomic<std::uint64_t>& counter)
      : options(std::move(o)), pipeline(std::move(p)), source(std::move(s)), session(std::move(sc)), sent(counter) {}

  double now_s() const { return std::chrono::duration<double>(Clock::now() - epoch).count(); }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpSession>(std::move(socket), options, clients, inbound)->run();
      if (acceptor.is_open()) accept();
    });
  }

  void capture_loop() {
    const double period = 1.0 / source->frame_rate();
    auto next_due = Clock::now();
    while (running) {
      std::optional<GrayFrame> frame;
      try {
        frame = source->next();
      } catch (const Error& e) {
        std::cerr << "capture: " << e.what() << "\n";
        break;
      }
      if (!frame) break;
      frames.push(TimedFrame{std::move(*frame), now_s()});
      if (options.pace_frames) {
        next_due += std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(period));
        const auto now = Clock::now();
        if (next_due < now) next_due = now;
        while (running && Clock::now() < next_due) {
          std::this_thread::sleep_for(std::min<Clock::duration>(next_due - Clock::now(), std::chrono::milliseconds(20)));
        }
      }
    }
  }

  void publish(const std::vector<wire::Outbound>& messages) {
    for (const auto& m : messages) outbound.push(wire::serialize(m));
  }

  void notify_target() {
    if (target_observer) target_observer(session.state().target);
  }

  void save_recording() {
    auto rows = session.take_recorded();
    if (rows.empty() || options.record_to.empty()) return;
    std::size_t first = 0;
    std::error_code ec;
    if (std::filesystem::exists(options.record_to, ec)) first = read_dataset(options.record_to).size();
    append_dataset(options.record_to, rows);
    // One metadata entry per contiguous run of a session id.
    for (std::size_t i = 0; i < rows.size();) {
      std::size_t j = i;
      SessionMetadata meta;
      meta.session_id = rows[i].session_id;
      meta.subject = options.subject;
      meta.frame_rate = source->frame_rate();
      meta.first_row = first + i;
      while (j < rows.size() && rows[j].session_id == meta.session_id) meta.timestamps_ms.push_back(rows[j++].timestamp_ms);
      meta.rows = j - i;
      append_session_metadata(options.record_to, meta);
      i = j;
    }
  }

  void worker_loop() {
    double last_stats = now_s();
    while (running) {
      while (auto msg = inbound.try_pop()) {
        try {
          if (std::holds_alternative<wire::StartLive>(*msg) || std::holds_alternative<wire::StartCalibration>(*msg) ||
              std::holds_alternative<wire::StartEvaluation>(*msg)) {
            pipeline.reset();
          }
          publish(session.handle(*msg, now_s()));
        } catch (const Error& e) {
          std::cerr << "session: " << e.what() << "\n";
        }
        notify_target();
      }
      if (auto tf = frames.pop_for(std::chrono::milliseconds(50))) {
        if (session.state().mode != SessionMode::idle) {
          const auto outcome = pipeline.process_frame(tf->frame);
          const auto target_before = session.state().target;
          publish(session.tick(FrameEvent::from(tf->t_s, outcome)));
          if (session.state().target != target_before) notify_target();
        }
      }
      if (session.state().mode == SessionMode::idle && !session.recorded().empty()) {
        try {
          save_recording();
        } catch (const Error& e) {
          std::cerr << "record: " << e.what() << "\n";
        }
      }
      if (now_s() - last_stats >= options.stats_interval_s) {
        last_stats = now_s();
        publish({wire::Stats{pipeline.stats(), session.state().session}});
      }
    }
  }

  void pump_loop() {
    while (auto msg = outbound.pop()) {
      auto shared = std::make_shared<const std::string>(std::move(*msg));
      net::post(ioc, [this, shared] {
        for (const auto& s : clients.sessions) s->send(shared);
      });
      ++sent;
    }
  }
};

Service::Service(ServiceOptions options, Pipeline pipeline, std::unique_ptr<FrameSource> source, SessionConfig session)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(pipeline), std::move(source), std::move(session), sent_)) {
  if (!impl_->source) throw Error(ErrorKind::parameter, "service needs a frame source");
}

Service::~Service() { stop(); }

void Service::on_target(std::function<void(std::optional<GazeClass>)> observer) {
  impl_->target_observer = std::move(observer);
}

unsigned short Service::start() {
  auto& s = *impl_;
  beast::error_code ec;
  const auto address = net::ip::make_address(s.options.host, ec);
  if (ec) throw Error(ErrorKind::configuration, "bad listen address " + s.options.host);
  const tcp::endpoint endpoint{address, s.options.port};
  s.acceptor.open(endpoint.protocol(), ec);
  if (!ec) s.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor.bind(endpoint, ec);
  if (!ec) s.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorKind::io, "cannot listen on " + s.options.host + ":" + std::to_string(s.options.port) + ": " + ec.message());
  const auto port = s.acceptor.local_endpoint().port();

  s.running = true;
  s.accept();
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.capture_thread = std::thread([&s] { s.capture_loop(); });
  s.worker_thread = std::thread([&s] { s.worker_loop(); });
  s.pump_thread = std::thread([&s] { s.pump_loop(); });
  return port;
}

void Service::stop() {
  auto& s = *impl_;
  if (s.running.exchange(false)) {
    s.frames.close();
    s.inbound.close();
    if (s.capture_thread.joinable()) s.capture_thread.join();
    if (s.worker_thread.joinable()) s.worker_thread.join();
    s.outbound.close();
    if (s.pump_thread.joinable()) s.pump_thread.join();
    net::post(s.ioc, [&s] {
      beast::error_code ec;
      s.acceptor.close(ec);
      for (const auto& c : s.clients.sessions) c->close();
      s.clients.sessions.clear();
      s.ioc.stop();
    });
    if (s.io_thread.joinable()) s.io_thread.join();
  }
  {
    std::lock_guard lock(s.stop_mutex);
    s.stopped = true;
  }
  s.stop_cv.notify_all();
}

void Service::wait() {
  auto& s = *impl_;
  std::unique_lock lock(s.stop_mutex);
  s.stop_cv.wait(lock, [&s] { return s.stopped; });
}

}  // namespace ocugaze::service
