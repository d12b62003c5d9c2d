#include <doctest.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "ocugaze/dataset.hpp"
#include "ocugaze/frame_source.hpp"
#include "ocugaze/synthetic_face.hpp"
#include "service.hpp"
#include "test_support.hpp"

using namespace ocugaze;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

const Model& service_model() {
  static const Model m = [] {
    SynthSpec spec;
    spec.per_class = 40;
    const auto data = synthesize(spec);
    std::vector<OcularFeatureVector> x;
    std::vector<GazeClass> y;
    for (const auto& d : data) {
      x.push_back(d.features);
      y.push_back(d.label);
    }
    TrainConfig cfg;
    cfg.epochs = 20;
    return train(x, y, cfg).model;
  }();
  return m;
}

// Synthetic viewer that looks wherever the service says the target is.
struct Viewer {
  std::mutex mutex;
  std::optional<GazeClass> target;

  FaceScene scene(std::size_t i) {
    std::lock_guard lock(mutex);
    auto s = scene_for_gaze(target.value_or(GazeClass::center));
    s.noise_sigma = 2.0;
    s.noise_seed = i;
    return s;
  }
};

struct Harness {
  Viewer viewer;
  std::unique_ptr<service::Service> svc;
  unsigned short port = 0;

  explicit Harness(service::ServiceOptions opts, SessionConfig session = {}) {
    opts.port = 0;
    opts.stats_interval_s = 0.25;
    auto source = std::make_unique<SyntheticSource>([this](std::size_t i) { return viewer.scene(i); }, 1000000, 60.0);
    svc = std::make_unique<service::Service>(std::move(opts), Pipeline(testing::frontal_cascade(), service_model()),
                                             std::move(source), session);
    svc->on_target([this](std::optional<GazeClass> t) {
      std::lock_guard lock(viewer.mutex);
      viewer.target = t;
    });
    port = svc->start();
  }
  ~Harness() { svc->stop(); }
};

http::response<http::string_body> http_request(unsigned short port, http::verb verb, const std::string& target,
                                               bool upgrade = false) {
  net::io_context ioc;
  beast::tcp_stream stream(ioc);
  stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  if (upgrade) {
    req.set(http::field::connection, "Upgrade");
    req.set(http::field::upgrade, "websocket");
    req.set(http::field::sec_websocket_version, "13");
    req.set(http::field::sec_websocket_key, "dGhlIHNhbXBsZSBub25jZQ==");
  }
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response_parser<http::string_body> parser;
  if (verb == http::verb::head) parser.skip(true);
  http::read(stream, buffer, parser);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return parser.release();
}

class WsClient {
 public:
  explicit WsClient(unsigned short port) : ws_(ioc_) {
    ws_.next_layer().connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    ws_.handshake("127.0.0.1", "/ws");
  }
  ~WsClient() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }
  void send(const std::string& text) { ws_.write(net::buffer(text)); }
  wire::Outbound receive() {
    beast::flat_buffer buffer;
    ws_.read(buffer);
    return wire::parse_outbound(beast::buffers_to_string(buffer.data()));
  }

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

using Clock = std::chrono::steady_clock;

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("static path resolution") {
    const std::filesystem::path root = "/srv/ui";
    CHECK(service::resolve_static(root, "/") == root / "index.html");
    CHECK(service::resolve_static(root, "/app.js?v=3") == root / "app.js");
    CHECK(service::resolve_static(root, "/assets/") == root / "assets/index.html");
    CHECK_FALSE(service::resolve_static(root, "/../etc/passwd"));
    CHECK_FALSE(service::resolve_static(root, "/a/../../b"));
    CHECK_FALSE(service::resolve_static(root, "/%2e%2e/x"));
    CHECK_FALSE(service::resolve_static(root, "//etc/passwd"));
    CHECK_FALSE(service::resolve_static(root, "/a\\b"));
    CHECK_FALSE(service::resolve_static(root, "relative"));
    CHECK(service::mime_type("x/app.js") == "application/javascript");
    CHECK(service::mime_type("index.html") == "text/html");
    CHECK(service::mime_type("blob.bin") == "application/octet-stream");
  }

  TEST_CASE("http without a static directory") {
    Harness h({});
    auto res = http_request(h.port, http::verb::get, "/");
    CHECK(res.result() == http::status::ok);
    CHECK(res.body().find("/ws") != std::string::npos);
    CHECK(http_request(h.port, http::verb::get, "/app.js").result() == http::status::not_found);
    CHECK(http_request(h.port, http::verb::post, "/").result() == http::status::method_not_allowed);
    CHECK(http_request(h.port, http::verb::get, "/elsewhere", true).result() == http::status::not_found);
  }

  TEST_CASE("static files") {
    const auto dir = testing::scratch_dir("static");
    std::ofstream(dir / "index.html") << "<html>gaze</html>";
    std::filesystem::create_directories(dir / "assets");
    std::ofstream(dir / "assets" / "app.js") << "console.log(1)";
    service::ServiceOptions opts;
    opts.static_dir = dir;
    Harness h(opts);
    auto res = http_request(h.port, http::verb::get, "/");
    CHECK(res.result() == http::status::ok);
    CHECK(res.body() == "<html>gaze</html>");
    res = http_request(h.port, http::verb::get, "/assets/app.js");
    CHECK(res.result() == http::status::ok);
    CHECK(res[http::field::content_type] == "application/javascript");
    CHECK(http_request(h.port, http::verb::get, "/missing.css").result() == http::status::not_found);
    CHECK(http_request(h.port, http::verb::get, "/../secret").result() == http::status::bad_request);
    res = http_request(h.port, http::verb::head, "/");
    CHECK(res.result() == http::status::ok);
    CHECK(res.body().empty());
  }

  TEST_CASE("calibration then evaluation over /ws") {
    const auto dir = testing::scratch_dir("service_record");
    service::ServiceOptions opts;
    opts.record_to = dir / "rec.csv";
    opts.subject = "tester";
    Harness h(opts, SessionConfig{0.5, 0.1, "session"});
    WsClient ws(h.port);

    ws.send("this is not json\n");
    ws.send(wire::serialize(wire::Inbound{wire::StartCalibration{0.5}}));
    std::vector<int> targets;
    std::size_t stats = 0;
    const auto deadline = Clock::now() + std::chrono::seconds(40);
    // Calibration emits no report; it ends after the ninth target's dwell.
    while (Clock::now() < deadline) {
      const auto m = ws.receive();
      if (const auto* t = std::get_if<wire::Target>(&m)) {
        CHECK(t->session == 1);
        targets.push_back(label(t->cls));
      }
      if (std::holds_alternative<wire::Stats>(m)) ++stats;
      if (targets.size() == 9 && std::holds_alternative<wire::Stats>(m)) break;
    }
    REQUIRE(targets.size() == 9);
    for (int c = 1; c <= 9; ++c) CHECK(targets[static_cast<std::size_t>(c - 1)] == c);
    std::this_thread::sleep_for(std::chrono::seconds(1));

    ws.send(wire::serialize(wire::Inbound{wire::StartEvaluation{0.5}}) + "\n");
    std::optional<wire::Report> report;
    std::size_t predictions = 0;
    std::size_t eval_targets = 0;
    while (Clock::now() < deadline && !report) {
      const auto m = ws.receive();
      if (const auto* p = std::get_if<wire::PredictionMsg>(&m)) {
        ++predictions;
        CHECK(p->session == 2);
        double total = 0.0;
        for (double c : p->confidences) total += c;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
      }
      if (std::holds_alternative<wire::Target>(m)) ++eval_targets;
      if (std::holds_alternative<wire::Stats>(m)) ++stats;
      if (const auto* r = std::get_if<wire::Report>(&m)) report = *r;
    }
    REQUIRE(report.has_value());
    CHECK(report->session == 2);
    CHECK(eval_targets == 9);
    CHECK(report->report.confusion.total() == predictions);
    CHECK(stats >= 2);

    ws.send(wire::serialize(wire::Inbound{wire::Stop{}}));
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    const auto rows = read_dataset(opts.record_to);
    CHECK(rows.size() >= predictions);
    const auto counts = class_counts(rows);
    for (auto n : counts) CHECK(n > 0);
    const auto meta = read_session_metadata(opts.record_to);
    REQUIRE(meta.size() == 2);
    CHECK(meta[0].session_id == "session-1");
    CHECK(meta[1].session_id == "session-2");
    CHECK(meta[0].subject == "tester");
    CHECK(meta[1].first_row == meta[0].rows);
    CHECK(meta[0].rows + meta[1].rows == rows.size());
  }

  TEST_CASE("live mode streams predictions to every client") {
    Harness h({});
    WsClient a(h.port);
    WsClient b(h.port);
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    a.send(wire::serialize(wire::Inbound{wire::StartLive{}}));
    for (WsClient* c : {&a, &b}) {
      int seen = 0;
      const auto deadline = Clock::now() + std::chrono::seconds(20);
      while (seen < 5 && Clock::now() < deadline) {
        const auto m = c->receive();
        if (std::holds_alternative<wire::PredictionMsg>(m)) ++seen;
        CHECK_FALSE(std::holds_alternative<wire::Target>(m));
      }
      CHECK(seen == 5);
    }
    CHECK(h.svc->messages_sent() > 0);
  }
}
