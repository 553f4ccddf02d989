#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "psld/gaussian.hpp"
#include "psld/params.hpp"
#include "psld/parallel.hpp"
#include "psld/state.hpp"

namespace psld {

/// Stand-in for a trained score network s_theta(z, t).
class ScoreProvider {
public:
    virtual ~ScoreProvider() = default;
    /// Score of every chain in `state`, conditioned on forward time `t_cond`.
    virtual ScoreEval evaluate(const JointState& state, double t_cond) = 0;
    virtual std::string name() const = 0;
};

/// Exact score of the Gaussian data model.
class GaussianScoreProvider final : public ScoreProvider {
public:
    GaussianScoreProvider(PsldParams p, GaussianDataSpec data, Executor exec = {});
    ScoreEval evaluate(const JointState& state, double t_cond) override;
    std::string name() const override { return "gaussian"; }

private:
    PsldParams p_;
    GaussianDataSpec data_;
    Executor exec_;
};

/// Returns s = 0 everywhere; reduces every scheme to its linear part.
class ZeroScoreProvider final : public ScoreProvider {
public:
    ScoreEval evaluate(const JointState& state, double t_cond) override;
    std::string name() const override { return "zero"; }
};

/// Child process speaking newline-delimited JSON over stdin/stdout.
///   request:  {"t": <real>, "x": [[...], ...], "m": [[...], ...]}
///   response: {"sx": [[...], ...], "sm": [[...], ...]}
/// One response per request, in order. The command runs under /bin/sh -c.
class ExternalScoreProvider final : public ScoreProvider {
public:
    explicit ExternalScoreProvider(std::string command,
                                   std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
    ~ExternalScoreProvider() override;
    ExternalScoreProvider(const ExternalScoreProvider&) = delete;
    ExternalScoreProvider& operator=(const ExternalScoreProvider&) = delete;

    ScoreEval evaluate(const JointState& state, double t_cond) override;
    std::string name() const override { return "external:" + command_; }

private:
    void write_all(const std::string& data);
    std::string read_line();

    std::string command_;
    std::chrono::milliseconds timeout_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

/// Encodes a request record (no trailing newline).
std::string encode_score_request(const JointState& state, double t_cond);
/// Decodes a response record into a ScoreEval shaped like `state`; throws
/// ProviderError on malformed JSON and ContractError on shape mismatch.
ScoreEval decode_score_response(const std::string& line, const JointState& state, double t_cond);

/// Per-run score-evaluation context. Every call counts as exactly one NFE
/// regardless of batch size, matching how network evaluations are counted
/// per sampling step.
class ScoreRun {
public:
    explicit ScoreRun(ScoreProvider& provider, bool record_calls = false)
        : provider_(&provider), record_(record_calls) {}

    /// Evaluates the provider, validates the reply, and counts one NFE.
    ScoreEval call(const JointState& state, double t_cond);

    std::size_t nfe() const { return nfe_; }
    /// Conditioning times of every call so far (only when recording).
    const std::vector<double>& call_times() const { return times_; }
    ScoreProvider& provider() { return *provider_; }

private:
    ScoreProvider* provider_;
    bool record_;
    std::size_t nfe_ = 0;
    std::vector<double> times_;
};

/// "gaussian" or "external:<cmd>" (also "zero" for diagnostics).
std::unique_ptr<ScoreProvider> make_provider(const std::string& spec, const PsldParams& p,
                                             const GaussianDataSpec& data, Executor exec = {});

}  // namespace psld
