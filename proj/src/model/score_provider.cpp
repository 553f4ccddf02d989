#include "psld/score_provider.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <nlohmann/json.hpp>
#include <thread>

#include "psld/errors.hpp"

namespace psld {

using nlohmann::json;

GaussianScoreProvider::GaussianScoreProvider(PsldParams p, GaussianDataSpec data, Executor exec)
    : p_(std::move(p)), data_(std::move(data)), exec_(exec) {
    validate_params(p_);
    validate_data(p_, data_);
}

ScoreEval GaussianScoreProvider::evaluate(const JointState& state, double t_cond) {
    return analytic_score(p_, data_, state, t_cond, exec_);
}

ScoreEval ZeroScoreProvider::evaluate(const JointState& state, double t_cond) {
    return ScoreEval(state.n_chains, state.dim, t_cond);
}

ScoreEval ScoreRun::call(const JointState& state, double t_cond) {
    check_shape(state);
    ScoreEval se = provider_->evaluate(state, t_cond);
    ++nfe_;
    if (record_) {
        times_.push_back(t_cond);
    }
    se.t_cond = t_cond;
    check_shape(state, se);
    check_finite(se, "score call " + std::to_string(nfe_) + " (t = " + std::to_string(t_cond) + ")");
    return se;
}

// -- wire format -------------------------------------------------------------

namespace {

json rows_of(const std::vector<double>& v, std::size_t n, std::size_t d) {
    json rows = json::array();
    for (std::size_t c = 0; c < n; ++c) {
        rows.push_back(std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(c * d),
                                           v.begin() + static_cast<std::ptrdiff_t>((c + 1) * d)));
    }
    return rows;
}

void unpack_rows(const json& rows, const char* field, std::size_t n, std::size_t d, std::vector<double>& out) {
    if (!rows.is_array() || rows.size() != n) {
        throw ContractError(std::string("score response field '") + field + "' must have " + std::to_string(n) +
                            " rows");
    }
    out.resize(n * d);
    for (std::size_t c = 0; c < n; ++c) {
        const json& row = rows[c];
        if (!row.is_array() || row.size() != d) {
            throw ContractError(std::string("score response field '") + field + "' row " + std::to_string(c) +
                                " must have " + std::to_string(d) + " entries");
        }
        for (std::size_t i = 0; i < d; ++i) {
            if (!row[i].is_number()) {
                throw ProviderError(std::string("score response field '") + field + "' has a non-numeric entry");
            }
            out[c * d + i] = row[i].get<double>();
        }
    }
}

}  // namespace

std::string encode_score_request(const JointState& state, double t_cond) {
    json req;
    req["t"] = t_cond;
    req["x"] = rows_of(state.x, state.n_chains, state.dim);
    req["m"] = rows_of(state.m, state.n_chains, state.dim);
    return req.dump();
}

ScoreEval decode_score_response(const std::string& line, const JointState& state, double t_cond) {
    json resp;
    try {
        resp = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProviderError(std::string("malformed score response: ") + e.what());
    }
    if (!resp.is_object() || !resp.contains("sx") || !resp.contains("sm")) {
        throw ProviderError("score response must be an object with 'sx' and 'sm'");
    }
    ScoreEval se(state.n_chains, state.dim, t_cond);
    unpack_rows(resp["sx"], "sx", state.n_chains, state.dim, se.sx);
    unpack_rows(resp["sm"], "sm", state.n_chains, state.dim, se.sm);
    return se;
}

// -- child process -----------------------------------------------------------

ExternalScoreProvider::ExternalScoreProvider(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
        throw ProviderError(std::string("pipe() failed: ") + std::strerror(errno));
    }
    // A dead child must surface as EPIPE, not kill the sampler.
    signal(SIGPIPE, SIG_IGN);
    pid_ = fork();
    if (pid_ < 0) {
        throw ProviderError(std::string("fork() failed: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

ExternalScoreProvider::~ExternalScoreProvider() {
    if (to_child_ >= 0) {
        close(to_child_);
    }
    if (from_child_ >= 0) {
        close(from_child_);
    }
    if (pid_ > 0) {
        int status = 0;
        for (int i = 0; i < 50; ++i) {
            if (waitpid(pid_, &status, WNOHANG) == pid_) {
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
    }
}

void ExternalScoreProvider::write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = write(to_child_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw ProviderError("external provider '" + command_ + "' closed its input: " + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string ExternalScoreProvider::read_line() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            throw ProviderError("external provider '" + command_ + "' timed out after " +
                                std::to_string(timeout_.count()) + " ms");
        }
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
        if (ready < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw ProviderError(std::string("poll() failed: ") + std::strerror(errno));
        }
        if (ready == 0) {
            continue;
        }
        char chunk[65536];
        const ssize_t n = read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw ProviderError(std::string("read() failed: ") + std::strerror(errno));
        }
        if (n == 0) {
            throw ProviderError("external provider '" + command_ + "' exited before responding");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

ScoreEval ExternalScoreProvider::evaluate(const JointState& state, double t_cond) {
    write_all(encode_score_request(state, t_cond) + "\n");
    return decode_score_response(read_line(), state, t_cond);
}

std::unique_ptr<ScoreProvider> make_provider(const std::string& spec, const PsldParams& p,
                                             const GaussianDataSpec& data, Executor exec) {
    if (spec == "gaussian") {
        return std::make_unique<GaussianScoreProvider>(p, data, exec);
    }
    if (spec == "zero") {
        return std::make_unique<ZeroScoreProvider>();
    }
    constexpr std::string_view kExternal = "external:";
    if (spec.rfind(kExternal, 0) == 0 && spec.size() > kExternal.size()) {
        return std::make_unique<ExternalScoreProvider>(spec.substr(kExternal.size()));
    }
    throw ValidationError("provider must be 'gaussian', 'zero' or 'external:<cmd>', got '" + spec + "'");
}

}  // namespace psld
