// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <memory>
#include <vector>

#include "poolsim/kernels/driver.hpp"
#include "poolsim/kernels/stimulus.hpp"
#include "poolsim/layouts/fft_fold.hpp"
#include "poolsim/numerics/fft.hpp"

namespace poolsim {

/// Signals for one FFT round: inputs[i] feeds FFT i of the round.
using SignalSource = std::function<std::vector<cf32>(std::uint64_t index)>;

/// `count` folded FFTs of length n. Instances run side by side on disjoint core
/// sets and `opt.batch` of them share each set between the same barriers. With
/// fewer cores than one instance needs, the instance's work is folded onto the
/// available cores. `source` supplies the input of FFT i (random if empty).
inline KernelRun run_fft(std::uint32_t n, std::uint64_t count, const ClusterTopology& t, const RunOptions& opt,
                         SignalSource source = {}, std::vector<std::vector<cf32>>* spectra = nullptr) {
    require(n >= 4 && is_power_of_four(n), ErrorKind::LengthNotPowerOfFour, "FFT length must be a power of 4");
    require(opt.batch >= 1, ErrorKind::InvalidArgument, "batch must be positive");
    const std::vector<CoreId> cores = core_range(t, opt.cores);
    const auto k = fft_cores_per_instance(n);
    require(k <= t.num_cores(), ErrorKind::TooLarge, std::to_string(n) + "-point FFT does not fit the cluster");
    const auto ncores = static_cast<std::uint32_t>(cores.size());
    const std::uint32_t sets = std::max(1u, ncores / k);
    if (!source) source = [&](std::uint64_t i) {
        auto rng = stream_rng(opt.seed, i);
        return complex_gaussian(n, rng);
    };
    const auto table = std::make_shared<TwiddleTable>(n);
    if (spectra) spectra->assign(count, {});

    auto build = [&, table](std::uint64_t first, std::uint64_t cnt) {
        const auto used = static_cast<std::uint32_t>(std::min<std::uint64_t>(sets, cnt));
        const auto batch = static_cast<std::uint32_t>((cnt + used - 1) / used);
        ReplicationPlan rep;
        rep.instances = used;
        for (std::uint32_t i = 0; i < used; ++i) {
            std::vector<CoreId> set(k);
            for (std::uint32_t c = 0; c < k; ++c) set[c] = i * k + c;
            rep.cores.push_back(std::move(set));
        }
        auto lay = std::make_shared<FftLayout>(fft_fold_plan(n, t, rep, batch));
        auto plan = std::make_shared<LayoutPlan>(ncores < k ? remap(lay->plan, cores) : lay->plan);
        // FFT j of the round is (instance j % used, batch slot j / used)
        auto inputs = std::make_shared<std::vector<std::vector<cf32>>>();
        for (std::uint64_t j = 0; j < cnt; ++j) inputs->push_back(source(first + j));
        Round r;
        r.plan = plan;
        r.stage = [lay, inputs, used](std::span<cf32> mem) {
            for (auto [id, v] : lay->constants) mem[lay->plan.address(id)] = v;
            for (std::size_t j = 0; j < inputs->size(); ++j)
                for (std::uint32_t e = 0; e < lay->n; ++e)
                    mem[lay->plan.address(lay->input(j % used, static_cast<std::uint32_t>(j / used), e))] = (*inputs)[j][e];
        };
        r.compare = [lay, inputs, used, table, first, spectra](std::span<const cf32> mem) {
            double err = 0.0;
            const std::uint32_t digits = log4(lay->n);
            for (std::size_t j = 0; j < inputs->size(); ++j) {
                const ComplexVector gold = fft_radix4(ComplexVector((*inputs)[j]), *table);
                std::vector<cf32> got(lay->n);
                for (std::uint32_t e = 0; e < lay->n; ++e) {
                    const cf32 v = mem[lay->plan.address(lay->output(j % used, static_cast<std::uint32_t>(j / used), e))];
                    got[digit_reverse4(e, digits)] = v;
                }
                for (std::uint32_t f = 0; f < lay->n; ++f) err = std::max(err, deviation(got[f], gold[f]));
                if (spectra) (*spectra)[first + j] = std::move(got);
            }
            return err;
        };
        return r;
    };
    KernelRun run = drive_rounds("fft", t, opt, count, static_cast<std::uint64_t>(sets) * opt.batch, build);
    run.useful_macs = count * n * log4(n);
    return run;
}

} // namespace poolsim
