"""Rake combining weights and the interference gains entering the SINR.

For user k with tap vector a_k and maximal-ratio combining weights w_k
(first P taps kept, rest zeroed), the receiver sees three gain families:

    signal          h_sp[k]   = w_k^H a_k
    self-interference h_si[k] = || Phi (B_k^H a_k + A_k^H w_k) ||^2
                                / (N h_sp[k])
    cross gains   h_mai[k][j] = ( ||B_k^H a_j||^2 + ||A_j^H w_k||^2
                                + |w_k^H a_j|^2 ) / (N h_sp[k])

where A_v is the L x (L-1) upper-band convolution matrix of a vector v
(see ``convolution_matrix_from_taps``), B_k is the same matrix built from
w_k, Phi is diagonal with entries sqrt(min(L-l, Nc)/Nc), and N is the
processing gain.

``compute_gains`` evaluates these through FFT cross-correlations, which is
exact and O(K^2 L log L); ``compute_gains_dense`` is the literal dense
matrix evaluation kept as an internal cross-check (the two agree to
roundoff and are tested against each other).
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.linalg import toeplitz

from .channel import ChannelRealization
from .errors import DegenerateChannelError
from .params import NetworkParams, fingers_from_ratio

# tolerated relative imaginary residue of w^H a under MRC (guards index bugs)
_IMAG_RESIDUE_TOL = 1e-9


@dataclass(frozen=True)
class RakeWeights:
    """MRC combining weights: the first ``fingers`` taps, zeros elsewhere."""

    weights: np.ndarray
    fingers: int


@dataclass(frozen=True)
class GainSet:
    """Per-user signal/self-interference gains and the KxK cross-gain table.

    ``h_mai`` has an all-zero diagonal; only off-diagonal entries enter the
    SINR.
    """

    h_sp: np.ndarray
    h_si: np.ndarray
    h_mai: np.ndarray

    @property
    def users(self) -> int:
        return len(self.h_sp)

    def si_ratio(self) -> np.ndarray:
        """Per-user chi = h_sp / h_si; +inf where h_si is zero."""
        with np.errstate(divide="ignore"):
            return np.where(self.h_si > 0.0, self.h_sp / self.h_si, np.inf)

    def mai_ratio_inv(self) -> np.ndarray:
        """Per-user inverse MAI ratio, sum_j h_mai[k][j] / h_sp[j]."""
        return (self.h_mai / self.h_sp[np.newaxis, :]).sum(axis=1)


def prake_weights(channel: ChannelRealization, rake_ratio: float) -> RakeWeights:
    """Partial-Rake MRC weights keeping the first round(rake_ratio*L) taps."""
    if not 0.0 < rake_ratio <= 1.0:
        raise ValueError("rake_ratio must lie in (0, 1]")
    paths = len(channel.taps)
    fingers = fingers_from_ratio(rake_ratio, paths)
    if fingers < 1:
        raise ValueError("rake_ratio keeps no fingers at this path count")
    weights = np.zeros_like(channel.taps)
    weights[:fingers] = channel.taps[:fingers]
    return RakeWeights(weights=weights, fingers=fingers)


def convolution_matrix_from_taps(v: np.ndarray) -> np.ndarray:
    """Upper-band L x (L-1) matrix whose column j holds (v_{L-j+1},...,v_L).

    1-based entry (i, j) equals v_{L-j+i} for i <= j and is zero below the
    band; the last row is identically zero. Constant along diagonals, so it
    is assembled as a Toeplitz matrix.
    """
    v = np.asarray(v)
    paths = len(v)
    if paths < 2:
        raise ValueError("need at least 2 taps")
    col = np.zeros(paths, dtype=v.dtype)
    col[0] = v[-1]
    row = v[::-1][: paths - 1]
    return toeplitz(col, row)


def phi_matrix(paths: int, chips: int) -> np.ndarray:
    """Diagonal entries phi_l = sqrt(min(L-l, Nc)/Nc) for l = 1..L-1."""
    if paths < 2:
        raise ValueError("paths must be at least 2")
    if chips < 1:
        raise ValueError("chips must be a positive integer")
    l = np.arange(1, paths)
    return np.sqrt(np.minimum(paths - l, chips) / chips)


def _stack(channels, weights, params):
    if len(channels) != params.users or len(weights) != params.users:
        raise ValueError("need one channel and one weight vector per user")
    taps = np.column_stack([c.taps for c in channels])
    w = np.column_stack([wt.weights for wt in weights])
    if taps.shape[0] != params.paths:
        raise ValueError("tap vectors do not match params.paths")
    return taps, w


def _signal_gains(taps, w):
    """Real h_sp vector from the diagonal of W^H T, with residue check."""
    inner = np.einsum("lk,lk->k", w.conj(), taps)
    h_sp = inner.real
    if np.any(h_sp <= 0.0):
        raise DegenerateChannelError("zero-energy tap vector: h_sp would vanish")
    if np.any(np.abs(inner.imag) > _IMAG_RESIDUE_TOL * np.abs(h_sp)):
        raise AssertionError("MRC signal gain has a non-real residue")
    return h_sp


def compute_gains(channels, weights, params: NetworkParams) -> GainSet:
    """Evaluate all gain families for a cell (FFT cross-correlation path).

    Args:
        channels: K ChannelRealization objects.
        weights: the K matching RakeWeights.
        params: network constants (paths, chips, frames enter here).

    Returns:
        GainSet with h_sp (K,), h_si (K,), h_mai (K, K).

    Raises:
        DegenerateChannelError: if some user has an all-zero tap vector.
    """
    taps, w = _stack(channels, weights, params)
    paths, users = taps.shape
    gain_n = params.processing_gain

    h_sp = _signal_gains(taps, w)
    cross = w.conj().T @ taps            # cross[k, j] = w_k^H a_j
    term3 = np.abs(cross) ** 2

    # Band-matrix products reduce to cross-correlations at lags 1..L-1:
    #   (A_v^H x)_{L-s} = conj( ifft( conj(fft x) * fft v )[s] )
    nfft = scipy.fft.next_fast_len(2 * paths)
    taps_f = scipy.fft.fft(taps, nfft, axis=0)
    w_f = scipy.fft.fft(w, nfft, axis=0)

    # phi^2 re-indexed by lag s = L - l: min(s, Nc)/Nc
    s = np.arange(1, paths)
    phi_sq = np.minimum(s, params.chips) / params.chips

    term1 = np.empty((users, users))
    term2 = np.empty((users, users))
    h_si = np.empty(users)
    for k in range(users):
        corr_bk = scipy.fft.ifft(taps_f.conj() * w_f[:, k:k + 1], axis=0)[1:paths]
        corr_ak = scipy.fft.ifft(w_f[:, k:k + 1].conj() * taps_f, axis=0)[1:paths]
        term1[k] = np.sum(np.abs(corr_bk) ** 2, axis=0)
        term2[k] = np.sum(np.abs(corr_ak) ** 2, axis=0)
        si_seq = corr_bk[:, k] + corr_ak[:, k]
        h_si[k] = phi_sq @ np.abs(si_seq) ** 2

    h_si /= gain_n * h_sp
    h_mai = (term1 + term2 + term3) / (gain_n * h_sp[:, np.newaxis])
    np.fill_diagonal(h_mai, 0.0)
    return GainSet(h_sp=h_sp, h_si=h_si, h_mai=h_mai)


def compute_gains_dense(channels, weights, params: NetworkParams) -> GainSet:
    """Same gains through explicit convolution matrices (cross-check path)."""
    taps, w = _stack(channels, weights, params)
    paths, users = taps.shape
    gain_n = params.processing_gain

    h_sp = _signal_gains(taps, w)
    cross = w.conj().T @ taps
    phi = phi_matrix(paths, params.chips)

    conv_taps = [convolution_matrix_from_taps(taps[:, k]) for k in range(users)]
    conv_w = [convolution_matrix_from_taps(w[:, k]) for k in range(users)]

    h_si = np.empty(users)
    h_mai = np.zeros((users, users))
    for k in range(users):
        b_h = conv_w[k].conj().T
        si_vec = phi * (b_h @ taps[:, k] + conv_taps[k].conj().T @ w[:, k])
        h_si[k] = np.sum(np.abs(si_vec) ** 2) / (gain_n * h_sp[k])
        for j in range(users):
            if j == k:
                continue
            num = (np.sum(np.abs(b_h @ taps[:, j]) ** 2)
                   + np.sum(np.abs(conv_taps[j].conj().T @ w[:, k]) ** 2)
                   + np.abs(cross[k, j]) ** 2)
            h_mai[k, j] = num / (gain_n * h_sp[k])
    return GainSet(h_sp=h_sp, h_si=h_si, h_mai=h_mai)


def sinr(user: int, gains: GainSet, powers: np.ndarray,
         noise_variance: float) -> float:
    """Output SINR of one user for a given power profile."""
    powers = np.asarray(powers, dtype=float)
    if np.any(powers < 0.0):
        raise ValueError("powers must be non-negative")
    interference = gains.h_mai[user] @ powers  # diagonal of h_mai is zero
    denom = gains.h_si[user] * powers[user] + interference + noise_variance
    return float(gains.h_sp[user] * powers[user] / denom)


def sinr_all(gains: GainSet, powers: np.ndarray,
             noise_variance: float) -> np.ndarray:
    """Vector of all K SINRs for a given power profile."""
    powers = np.asarray(powers, dtype=float)
    interference = gains.h_mai @ powers
    denom = gains.h_si * powers + interference + noise_variance
    return gains.h_sp * powers / denom
