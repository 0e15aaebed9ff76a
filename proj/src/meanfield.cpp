#include "bpsim/meanfield.hpp"

#include <stdexcept>

namespace bpsim {

std::string_view to_string(EstimatorMode m) noexcept {
    return m == EstimatorMode::PerSample ? "per-sample" : "ensemble-mean";
}

std::string_view to_string(ControlRule r) noexcept {
    return r == ControlRule::RandomRepresentative ? "representative" : "majority";
}

std::optional<EstimatorMode> parse_estimator(std::string_view s) noexcept {
    if (s == "per-sample") return EstimatorMode::PerSample;
    if (s == "ensemble-mean") return EstimatorMode::EnsembleMean;
    return std::nullopt;
}

std::optional<ControlRule> parse_control_rule(std::string_view s) noexcept {
    if (s == "representative") return ControlRule::RandomRepresentative;
    if (s == "majority") return ControlRule::PerSampleMajority;
    return std::nullopt;
}

void MeanFieldEstimate::resize(std::size_t n) {
    qbar.assign(n, 0.0);
    muchi_bar.assign(n, 0.0);
    arrivals.assign(n, 0.0);
    departures.assign(n, 0.0);
    arrival_resid.assign(n, 0.0);
    departure_resid.assign(n, 0.0);
    truncations.assign(n, 0);
}

EnsembleInit init_ensemble(const Topology& topo, std::size_t num_samples,
                           const ParamRanges& ranges, std::uint64_t master_seed) {
    if (num_samples == 0) throw std::invalid_argument("ensemble needs M >= 1 samples");
    EnsembleInit init;
    const std::size_t n = topo.num_nodes();
    init.params = draw_node_params(master_seed, n, ranges);
    init.state.num_nodes = n;
    init.state.num_samples = num_samples;
    init.state.q.assign(n * num_samples, 0.0);
    init.state.chi = constant_schedule(topo, true);
    return init;
}

namespace {

inline std::uint64_t sample_key(const EnsembleModel& model, std::size_t j) noexcept {
    return model.sample_keys.empty() ? j : model.sample_keys[j];
}

void check_model(const EnsembleModel& model, const EnsembleState& es) {
    if (model.topo->num_nodes() != es.num_nodes || model.node->size() != es.num_nodes ||
        es.q.size() != es.num_nodes * es.num_samples || es.chi.size() != es.num_nodes) {
        throw std::invalid_argument("ensemble_step: state and model sizes disagree");
    }
    if (!model.sample_keys.empty() && model.sample_keys.size() != es.num_samples) {
        throw std::invalid_argument("ensemble_step: sample_keys must have M entries");
    }
}

struct SampleDraw {
    double arrivals;
    double departures;
    bool truncated;
};

inline SampleDraw draw_sample(const EnsembleModel& model, NodeId i, std::uint64_t key, double q,
                              double mu, std::uint8_t chi, std::uint64_t step) {
    const double dt = model.global.dt;
    RngStream arr(model.seed, {i, key, Purpose::Arrival, step});
    const double lam = arrival_rate(model.arrival_hook, i, step, model.node->lambda[i]);
    SampleDraw d{static_cast<double>(sample_poisson(arr, lam * dt)), 0.0, false};
    if (chi != 0) {
        RngStream dep(model.seed, {i, key, Purpose::Departure, step});
        const auto raw = static_cast<double>(sample_poisson(dep, mu * dt));
        d.truncated = raw > q;
        d.departures = d.truncated ? q : raw;
    }
    return d;
}

inline std::uint8_t next_control(const EnsembleModel& model, std::span<const double> samples,
                                 double qbar, NodeId i, std::uint64_t step) {
    switch (model.policy) {
        case SchedulerKind::AlwaysOn: return 1;
        case SchedulerKind::AlwaysOff: return 0;
        default: return update_control(model, samples, qbar, i, step);
    }
}

}  // namespace

std::uint8_t update_control(const EnsembleModel& model, std::span<const double> samples,
                            double qbar, NodeId i, std::uint64_t step) {
    const std::size_t m = samples.size();
    if (model.rule == ControlRule::PerSampleMajority) {
        std::size_t above = 0;
        for (double v : samples) above += v > qbar ? 1 : 0;
        return 2 * above > m ? 1 : 0;
    }
    RngStream rs(model.seed, {i, 0, Purpose::Representative, step});
    const std::uint64_t key = sample_index(rs, m);
    std::size_t pos = key;
    if (!model.sample_keys.empty()) {
        for (std::size_t j = 0; j < m; ++j) {
            if (model.sample_keys[j] == key) {
                pos = j;
                break;
            }
        }
    }
    return meanfield_control(samples[pos], qbar);
}

void ensemble_step(const EnsembleModel& model, EnsembleState& es, MeanFieldEstimate& est) {
    check_model(model, es);
    const std::size_t n = es.num_nodes;
    const std::size_t m = es.num_samples;
    const std::uint64_t step = es.step + 1;
    const double dt = model.global.dt;
    const double keep = 1.0 - model.global.beta;
    const double inv_m = 1.0 / static_cast<double>(m);
    const Topology& topo = *model.topo;
    if (est.qbar.size() != n) est.resize(n);

    bool negative = false;
    const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) reduction(|| : negative)
    for (std::int64_t ii = 0; ii < sn; ++ii) {
        const auto i = static_cast<NodeId>(ii);
        std::span<double> row = es.samples(i);
        if (topo.is_sink(i)) {
            for (double& v : row) v = 0.0;
            est.qbar[i] = est.muchi_bar[i] = est.departures[i] = est.arrivals[i] = 0.0;
            est.arrival_resid[i] = est.departure_resid[i] = 0.0;
            est.truncations[i] = 0;
            es.chi[i] = 0;
            continue;
        }
        const std::uint8_t chi = es.chi[i];
        const double m_i = model.node->m[i];
        const double lam_dt = arrival_rate(model.arrival_hook, i, step, model.node->lambda[i]) * dt;

        double mu_sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) mu_sum += service_rate(m_i, model.global.alpha, row[j]);
        const double muchi_mean = chi != 0 ? mu_sum * inv_m : 0.0;

        double a_res = 0.0, d_res = 0.0, d_sum = 0.0, q_sum = 0.0, a_sum = 0.0;
        std::uint32_t trunc = 0;
        for (std::size_t j = 0; j < m; ++j) {
            const double q0 = row[j];
            const double mu = service_rate(m_i, model.global.alpha, q0);
            const SampleDraw d = draw_sample(model, i, sample_key(model, j), q0, mu, chi, step);
            const double f = chi == 0 ? 0.0
                             : model.estimator == EstimatorMode::PerSample ? mu * dt
                                                                           : muchi_mean * dt;
            const double next = (q0 - d.departures) + keep * (d.arrivals + f);
            negative = negative || next < 0.0;
            row[j] = next;
            q_sum += next;
            a_res += keep * (d.arrivals - lam_dt);
            d_res += d.departures - (chi != 0 ? mu * dt : 0.0);
            d_sum += d.departures;
            a_sum += d.arrivals;
            trunc += d.truncated ? 1 : 0;
        }
        est.qbar[i] = q_sum * inv_m;
        est.muchi_bar[i] = muchi_mean;
        est.arrivals[i] = a_sum * inv_m;
        est.departures[i] = d_sum * inv_m;
        est.arrival_resid[i] = a_res * inv_m;
        est.departure_resid[i] = d_res * inv_m;
        est.truncations[i] = trunc;
        es.chi[i] = next_control(model, row, est.qbar[i], i, step);
    }
    if (negative) throw std::logic_error("ensemble_step: queue went negative after truncation");
    es.step = step;
}

void ensemble_step_reference(const EnsembleModel& model, EnsembleState& es,
                             MeanFieldEstimate& est) {
    check_model(model, es);
    const std::size_t n = es.num_nodes;
    const std::size_t m = es.num_samples;
    const std::uint64_t step = es.step + 1;
    const double dt = model.global.dt;
    const double keep = 1.0 - model.global.beta;
    const double inv_m = 1.0 / static_cast<double>(m);
    const Topology& topo = *model.topo;
    est.resize(n);

    // Service rates from the step-start ensemble, then their per-node mean.
    std::vector<double> mu(n * m, 0.0);
    std::vector<double> mu_sum(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            mu[i * m + j] = service_rate(model.node->m[i], model.global.alpha, es.at(j, i));
            mu_sum[i] += mu[i * m + j];
        }
    }

    std::vector<double> q_sum(n, 0.0), a_res(n, 0.0), d_res(n, 0.0), d_sum(n, 0.0), a_sum(n, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto node = static_cast<NodeId>(i);
            if (topo.is_sink(node)) continue;
            const std::uint8_t chi = es.chi[i];
            const double q0 = es.at(j, i);
            const double rate = mu[i * m + j];
            const SampleDraw d = draw_sample(model, node, sample_key(model, j), q0, rate, chi, step);
            double f = 0.0;
            if (chi != 0) {
                f = model.estimator == EstimatorMode::PerSample ? rate * dt
                                                                : (mu_sum[i] * inv_m) * dt;
            }
            const double next = (q0 - d.departures) + keep * (d.arrivals + f);
            if (next < 0.0) throw std::logic_error("ensemble_step_reference: negative queue");
            es.at(j, i) = next;
            q_sum[i] += next;
            a_res[i] += keep * (d.arrivals - arrival_rate(model.arrival_hook, node, step, model.node->lambda[i]) * dt);
            d_res[i] += d.departures - (chi != 0 ? rate * dt : 0.0);
            d_sum[i] += d.departures;
            a_sum[i] += d.arrivals;
            est.truncations[i] += d.truncated ? 1 : 0;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto node = static_cast<NodeId>(i);
        if (topo.is_sink(node)) {
            for (std::size_t j = 0; j < m; ++j) es.at(j, i) = 0.0;
            es.chi[i] = 0;
            continue;
        }
        est.qbar[i] = q_sum[i] * inv_m;
        est.muchi_bar[i] = es.chi[i] != 0 ? mu_sum[i] * inv_m : 0.0;
        est.arrivals[i] = a_sum[i] * inv_m;
        est.departures[i] = d_sum[i] * inv_m;
        est.arrival_resid[i] = a_res[i] * inv_m;
        est.departure_resid[i] = d_res[i] * inv_m;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto node = static_cast<NodeId>(i);
        if (topo.is_sink(node)) continue;
        es.chi[i] = next_control(model, es.samples(i), est.qbar[i], node, step);
    }
    es.step = step;
}

}  // namespace bpsim
