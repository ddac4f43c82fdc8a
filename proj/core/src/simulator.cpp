#include "polling/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "polling/errors.hpp"
#include "polling/rng.hpp"

namespace polling {

namespace {

constexpr int kH = 0;
constexpr int kL = 1;
constexpr int k2 = 2;

// Tie-break ranks at equal timestamps; fixed so that deterministic
// switch-over times still yield a deterministic event order.
enum EventKind : int { kServiceCompletion = 0, kSwitchoverCompletion = 1, kArrival = 2 };

struct Event {
    double time;
    int kind;
    std::uint64_t seq;
    int payload;  // arrival: class index; switchover completion: destination queue
};

struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.kind != b.kind) return a.kind > b.kind;
        return a.seq > b.seq;
    }
};

const char* class_name(int cls) {
    switch (cls) {
        case kH: return "H";
        case kL: return "L";
        case k2: return "2";
    }
    return "-";
}

class Engine {
public:
    Engine(const SystemConfig& config, const SimOptions& opt)
        : cfg_(config), opt_(opt), model_(derive_model(config)),
          arr_{Rng(opt.seed, 0), Rng(opt.seed, 1), Rng(opt.seed, 2)},
          svc_{Rng(opt.seed, 3), Rng(opt.seed, 4), Rng(opt.seed, 5)},
          routing_(opt.seed, 6),
          sw_{Rng(opt.seed, 7), Rng(opt.seed, 8), Rng(opt.seed, 9), Rng(opt.seed, 10)} {
        lambda_[kH] = cfg_.lambda_h;
        lambda_[kL] = cfg_.lambda_l;
        lambda_[k2] = cfg_.lambda_2;
        arrival_free_ = lambda_[kH] + lambda_[kL] + lambda_[k2] == 0.0;
        warmup_count_ = static_cast<std::uint64_t>(std::floor(opt.warmup_fraction *
                                                              static_cast<double>(opt.served_target)));
        result_.seed = opt.seed;
    }

    SampleSet run() {
        for (int c : {kH, kL, k2}) {
            if (lambda_[c] > 0.0) push_event(arr_[c].exponential(lambda_[c]), kArrival, c);
        }
        if (warmup_count_ == 0 || arrival_free_) begin_measurement(0.0);
        poll(1, 0.0);

        while (!done_) {
            if (events_.empty()) throw NumericalError("simulation event calendar ran dry");
            const Event ev = events_.top();
            events_.pop();
            advance_clock(ev.time);
            switch (ev.kind) {
                case kArrival: on_arrival(ev.payload, ev.time); break;
                case kServiceCompletion: on_service_completion(ev.time); break;
                case kSwitchoverCompletion: on_switchover_completion(ev.payload, ev.time); break;
            }
        }
        finalize();
        return std::move(result_);
    }

private:
    void push_event(double time, int kind, int payload) {
        events_.push(Event{time, kind, next_seq_++, payload});
    }

    void log(double t, const char* kind, int queue, int cls) {
        if (!opt_.event_log) return;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.17g %s %d %s\n", t, kind, queue, class_name(cls));
        *opt_.event_log << buf;
    }

    void advance_clock(double t) {
        if (measuring_) {
            const double dt = t - last_t_;
            for (int c : {kH, kL, k2}) {
                wait_integral_[c] += dt * n_wait_[c];
                sys_integral_[c] += dt * n_sys_[c];
            }
        }
        last_t_ = t;
    }

    void begin_measurement(double t) {
        measuring_ = true;
        last_t_ = t;
        t_warm_ = t;
        wait_integral_ = {0.0, 0.0, 0.0};
        sys_integral_ = {0.0, 0.0, 0.0};
        pasta_sum_ = 0.0;
        pasta_n_ = 0;
    }

    bool system_empty() const {
        return buffer_[kH].empty() && buffer_[kL].empty() && buffer_[k2].empty() && !serving_;
    }

    void on_arrival(int cls, double t) {
        push_event(t + arr_[cls].exponential(lambda_[cls]), kArrival, cls);
        if (cls == k2 && measuring_) {
            pasta_sum_ += n_wait_[k2];
            ++pasta_n_;
        }
        log(t, "arrival", cls == k2 ? 2 : 1, cls);
        buffer_[cls].push_back(t);
        ++n_wait_[cls];
        ++n_sys_[cls];
        if (idle_) {
            idle_ = false;
            poll(cls == k2 ? 2 : 1, t);
        }
    }

    void poll(int queue, double t) {
        log(t, "visit_begin", queue, -1);
        auto& count = queue == 1 ? result_.visits_q1 : result_.visits_q2;
        ++count;
        auto& last = last_visit_begin_[queue - 1];
        if (last.has_value() && measuring_ && *last >= t_warm_) {
            (queue == 1 ? result_.cycles_q1 : result_.cycles_q2).push_back(t - *last);
        }
        last = t;
        if (arrival_free_ && queue == 1 && result_.visits_q1 > opt_.served_target) {
            done_ = true;
            return;
        }
        at_queue_ = queue;
        serve_next(t);
    }

    // Exhaustive discipline: pick the next customer at the current queue, or
    // end the visit when its buffer (both classes at Q1) is empty.
    void serve_next(double t) {
        int cls = -1;
        if (at_queue_ == 1) {
            if (!buffer_[kH].empty()) cls = kH;
            else if (!buffer_[kL].empty()) cls = kL;
        } else if (!buffer_[k2].empty()) {
            cls = k2;
        }
        if (cls < 0) {
            end_visit(t);
            return;
        }
        const double arrived = buffer_[cls].front();
        buffer_[cls].pop_front();
        --n_wait_[cls];
        serving_ = true;
        service_class_ = cls;
        service_wait_ = t - arrived;
        log(t, "service_start", at_queue_, cls);
        push_event(t + sample_service(cls), kServiceCompletion, 0);
    }

    double sample_service(int cls) {
        switch (cls) {
            case kH: return cfg_.service_h.sample(svc_[kH]);
            case kL: return cfg_.service_l.sample(svc_[kL]);
            default: return cfg_.service_2.sample(svc_[k2]);
        }
    }

    void on_service_completion(double t) {
        log(t, "service_completion", at_queue_, service_class_);
        const int cls = service_class_;
        serving_ = false;
        --n_sys_[cls];
        ++result_.served;
        if (!measuring_ && result_.served >= warmup_count_) {
            begin_measurement(t);
        } else if (measuring_) {
            result_.waiting[cls].push_back(service_wait_);
        }
        if (result_.served >= opt_.served_target) {
            done_ = true;
            return;
        }
        serve_next(t);
    }

    void end_visit(double t) {
        if (at_queue_ == 1 && (!buffer_[kH].empty() || !buffer_[kL].empty())) {
            throw std::logic_error("exhaustiveness violated at Q1 visit end");
        }
        if (at_queue_ == 2 && !buffer_[k2].empty()) {
            throw std::logic_error("exhaustiveness violated at Q2 visit end");
        }
        log(t, "visit_end", at_queue_, -1);
        // No idle state in the model: the server always starts a switch-over.
        // The one exception is an empty system with all switch-over times
        // zero, which would spin at the same timestamp forever; the server
        // then parks until the next arrival (the zero-switch-over M/G/1 view).
        if (model_.es_tot == 0.0 && system_empty()) {
            idle_ = true;
            log(t, "idle_begin", at_queue_, -1);
            return;
        }
        const int from = at_queue_;
        const bool repeat = routing_.uniform01() < (from == 1 ? cfg_.p1 : cfg_.p2);
        const int dest = repeat ? from : 3 - from;
        const double dur = switchover_dist(from, dest).sample(sw_[2 * (from - 1) + (dest - 1)]);
        log(t, "switchover_start", dest, -1);
        push_event(t + dur, kSwitchoverCompletion, dest);
    }

    const ServiceDistribution& switchover_dist(int from, int to) const {
        if (from == 1) return to == 1 ? cfg_.s11 : cfg_.s12;
        return to == 1 ? cfg_.s21 : cfg_.s22;
    }

    void on_switchover_completion(int dest, double t) {
        log(t, "switchover_completion", dest, -1);
        poll(dest, t);
    }

    void finalize() {
        advance_clock(last_t_);
        result_.warmup_discarded = warmup_count_ < result_.served ? warmup_count_ : result_.served;
        result_.horizon = measuring_ ? last_t_ - t_warm_ : 0.0;
        if (result_.horizon > 0.0) {
            for (int c : {kH, kL, k2}) {
                result_.time_avg_waiting[c] = wait_integral_[c] / result_.horizon;
                result_.time_avg_in_system[c] = sys_integral_[c] / result_.horizon;
            }
        }
        if (pasta_n_ > 0) {
            result_.arrival_avg_q2 = pasta_sum_ / static_cast<double>(pasta_n_);
            result_.arrival_avg_q2_count = pasta_n_;
        }
    }

    const SystemConfig& cfg_;
    const SimOptions& opt_;
    DerivedModel model_;

    std::array<Rng, 3> arr_;
    std::array<Rng, 3> svc_;
    Rng routing_;
    std::array<Rng, 4> sw_;

    std::priority_queue<Event, std::vector<Event>, EventOrder> events_;
    std::uint64_t next_seq_ = 0;

    std::array<double, 3> lambda_{};
    bool arrival_free_ = false;
    std::array<std::deque<double>, 3> buffer_;
    bool serving_ = false;
    bool idle_ = false;
    int at_queue_ = 1;
    int service_class_ = -1;
    double service_wait_ = 0.0;
    std::array<std::optional<double>, 2> last_visit_begin_;

    std::uint64_t warmup_count_ = 0;
    bool measuring_ = false;
    bool done_ = false;
    double last_t_ = 0.0;
    double t_warm_ = 0.0;
    std::array<long, 3> n_wait_{};
    std::array<long, 3> n_sys_{};
    std::array<double, 3> wait_integral_{};
    std::array<double, 3> sys_integral_{};
    double pasta_sum_ = 0.0;
    std::uint64_t pasta_n_ = 0;

    SampleSet result_;
};

}  // namespace

SampleSet run_simulation(const SystemConfig& config, const SimOptions& options) {
    if (!(config.lambda_h >= 0.0 && config.lambda_l >= 0.0 && config.lambda_2 >= 0.0)) {
        throw ValidationError("arrival rates must be >= 0");
    }
    if (!(config.p1 >= 0.0 && config.p1 < 1.0 && config.p2 >= 0.0 && config.p2 < 1.0)) {
        throw ValidationError("repeat probabilities must be in [0, 1)");
    }
    if (config.total_load() >= 1.0) {
        throw ValidationError("simulation refuses unstable configurations (total load >= 1)");
    }
    if (options.served_target < 1) throw ValidationError("served-customer target must be >= 1");
    if (!(options.warmup_fraction >= 0.0 && options.warmup_fraction <= 0.9)) {
        throw ValidationError("warmup fraction must be in [0, 0.9]");
    }
    return Engine(config, options).run();
}

void export_waiting_csv(const SampleSet& samples, std::ostream& out) {
    out << "waiting_H[time],waiting_L[time],waiting_2[time]\n";
    const std::size_t rows = std::max({samples.waiting[0].size(), samples.waiting[1].size(),
                                       samples.waiting[2].size()});
    char buf[32];
    for (std::size_t i = 0; i < rows; ++i) {
        for (int c = 0; c < 3; ++c) {
            if (i < samples.waiting[c].size()) {
                std::snprintf(buf, sizeof buf, "%.12g", samples.waiting[c][i]);
                out << buf;
            }
            out << (c < 2 ? "," : "\n");
        }
    }
}

}  // namespace polling
