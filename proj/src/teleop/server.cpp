#include "safeik/teleop/server.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace safeik::teleop {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

struct Broadcast {
  std::shared_ptr<const StateUpdate> state;
  std::shared_ptr<const std::string> frame;  // encoded with dropped = 0
};

}  // namespace

struct Server::Impl {
  class Client;

  Impl(Session s, ServerOptions o)
      : session(std::move(s)), options(std::move(o)), acceptor(ioc), guard(ioc.get_executor()) {}

  Session session;
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::executor_work_guard<net::io_context::executor_type> guard;
  std::thread io_thread;
  unsigned short bound_port = 0;

  std::atomic<bool> stopping{false};
  std::atomic<bool> has_controller{false};
  std::atomic<std::uint64_t> ticks{0};

  // Controller frames waiting for the next tick boundary, in arrival order.
  std::mutex inbound_mu;
  std::vector<std::string> inbound;

  // io-thread only
  std::vector<std::shared_ptr<Client>> clients;
  Client* controller = nullptr;
  std::shared_ptr<const std::string> latest;

  void do_accept();
  void on_open(const std::shared_ptr<Client>& c);
  void on_frame(Client& c, std::string text);
  void on_close(Client& c);
  void broadcast(Broadcast b);
};

class Server::Impl::Client : public std::enable_shared_from_this<Client> {
 public:
  Client(Impl& server, tcp::socket socket) : server_(server), ws_(std::move(socket)) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->server_.on_open(self);
      self->read();
    });
  }

  bool controller = false;

  void send(std::shared_ptr<const std::string> frame) {
    out_.push_back(std::move(frame));
    if (!writing_) write();
  }

  void send_state(const Broadcast& b) {
    if (closed_) return;
    if (out_.size() >= server_.options.max_pending_frames) {
      ++dropped_;
      return;
    }
    if (dropped_ == 0) return send(b.frame);
    StateUpdate u = *b.state;
    u.dropped = dropped_;
    dropped_ = 0;
    send(std::make_shared<const std::string>(encode_state(u)));
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    ws_.async_close(websocket::close_code::going_away,
                    [self = shared_from_this()](beast::error_code) {});
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->server_.on_close(*self);
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.on_frame(*self, std::move(text));
      self->read();
    });
  }

  void write() {
    if (out_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*out_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->out_.pop_front();
                      if (ec) {
                        self->writing_ = false;
                        return;
                      }
                      self->write();
                    });
  }

  Impl& server_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> out_;
  bool writing_ = false;
  bool closed_ = false;
  int dropped_ = 0;
};

void Server::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<Client>(*this, std::move(socket))->start();
    do_accept();
  });
}

void Server::Impl::on_open(const std::shared_ptr<Client>& c) {
  clients.push_back(c);
  if (!controller) {
    controller = c.get();
    c->controller = true;
    has_controller = true;
  }
  c->send(std::make_shared<const std::string>(encode_welcome(c->controller)));
  if (latest) c->send(latest);
}

void Server::Impl::on_frame(Client& c, std::string text) {
  const auto parsed = parse_client_message(text);
  if (const auto* err = std::get_if<ProtocolError>(&parsed)) {
    c.send(std::make_shared<const std::string>(encode_error(*err)));
    return;
  }
  if (!c.controller) {
    c.send(std::make_shared<const std::string>(
        encode_error({"not_controller", "observers cannot change the session"})));
    return;
  }
  std::lock_guard lock(inbound_mu);
  inbound.push_back(std::move(text));
}

void Server::Impl::on_close(Client& c) {
  std::erase_if(clients, [&](const auto& p) { return p.get() == &c; });
  if (controller == &c) {
    // the slot stays free until a new connection takes it
    controller = nullptr;
    has_controller = false;
  }
}

void Server::Impl::broadcast(Broadcast b) {
  net::post(ioc, [this, b = std::move(b)] {
    latest = b.frame;
    for (const auto& c : clients) c->send_state(b);
  });
}

Server::Server(Session session, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(session), std::move(options))) {
  if (!(impl_->options.rate_hz > 0.0)) throw std::invalid_argument("rate must be positive");
  if (impl_->options.max_pending_frames == 0) throw std::invalid_argument("queue must hold a frame");
  try {
    const tcp::endpoint ep(net::ip::make_address(impl_->options.address), impl_->options.port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
    impl_->bound_port = impl_->acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw std::runtime_error("cannot listen on " + impl_->options.address + ":" +
                             std::to_string(impl_->options.port) + ": " + e.code().message());
  }
  impl_->do_accept();
  impl_->io_thread = std::thread([this] { impl_->ioc.run(); });
}

Server::~Server() {
  stop();
  if (impl_->io_thread.joinable()) {
    impl_->ioc.stop();
    impl_->io_thread.join();
  }
}

unsigned short Server::port() const { return impl_->bound_port; }

std::uint64_t Server::ticks() const { return impl_->ticks.load(); }

void Server::stop() { impl_->stopping = true; }

void Server::run() {
  Impl& s = *impl_;
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / s.options.rate_hz));
  std::ofstream log;
  if (s.options.log_path) {
    log.open(*s.options.log_path);
    if (!log) throw std::runtime_error("cannot write " + *s.options.log_path);
  }
  MessageScript record;
  auto emit = [&](const StateUpdate& u) {
    auto frame = std::make_shared<const std::string>(encode_state(u));
    if (log.is_open()) log << *frame << '\n';
    s.broadcast({std::make_shared<const StateUpdate>(u), std::move(frame)});
  };

  auto next = clock::now();
  while (!s.stopping) {
    std::vector<std::string> batch;
    {
      std::lock_guard lock(s.inbound_mu);
      batch.swap(s.inbound);
    }
    for (std::string& text : batch) {
      const auto parsed = parse_client_message(text);
      if (!std::holds_alternative<ClientMessage>(parsed)) continue;  // screened on arrival
      record.entries.push_back({s.session.tick_count(), text});
      s.session.apply(std::get<ClientMessage>(parsed));
    }
    // No controller or paused: the session clock stands still.
    if (s.has_controller && !s.session.paused()) {
      emit(s.session.tick());
      s.ticks = s.session.tick_count();
    } else if (!batch.empty()) {
      emit(s.session.last());
    }
    next += period;
    const auto now = clock::now();
    if (next < now) next = now;  // fell behind; do not try to catch up
    std::this_thread::sleep_until(next);
  }

  net::post(s.ioc, [&s] {
    s.acceptor.close();
    for (const auto& c : s.clients) c->close();
  });
  s.guard.reset();
  s.io_thread.join();

  if (s.options.record_path) {
    record.end = s.session.tick_count();
    std::ofstream out(*s.options.record_path);
    out << format_script(record);
    if (!out) throw std::runtime_error("cannot write " + *s.options.record_path);
  }
}

}  // namespace safeik::teleop
