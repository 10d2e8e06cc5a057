"""Tour of the reverse-mode tape: primitives, backward, gradient checking.

Run:  python3 demos/01_autodiff_and_gradients.py
"""

import numpy as np

import mosgnn.autodiff as ad

rng = np.random.default_rng(0)

# Every operation returns a Tensor recording its inputs and a VJP closure.
w = ad.Parameter("w", rng.standard_normal((4, 3)))
x = rng.standard_normal((5, 4))

h = ad.matmul(x, w)
h = ad.pairnorm(h)
h = ad.relu(h)
out = ad.log_softmax(h)
print("forward output shape:", out.value.shape)
print("rows sum to one after exp:", np.exp(out.value).sum(axis=1))

# A scalar loss seeds the backward sweep; gradients land in Parameter.grad.
targets = rng.integers(0, 3, 5)
loss = ad.nll_loss(out, targets, np.ones(5, dtype=bool))
print("\nloss:", float(loss.value))
ad.backward(loss)
print("grad norm of w:", np.linalg.norm(w.grad))

# Gradients accumulate until explicitly cleared.
first_grad = w.grad.copy()
loss2 = ad.nll_loss(
    ad.log_softmax(ad.relu(ad.pairnorm(ad.matmul(x, w)))), targets,
    np.ones(5, dtype=bool))
ad.backward(loss2)
print("after second backward, grad doubled:",
      np.array_equal(w.grad, 2 * first_grad))
w.zero_grad()
print("after zero_grad, grad is zero:", np.all(w.grad == 0))


# check_gradients compares analytic gradients with central finite differences.
def forward():
    hidden = ad.relu(ad.pairnorm(ad.matmul(x, w)))
    return ad.nll_loss(ad.log_softmax(hidden), targets, np.ones(5, dtype=bool))


err = ad.check_gradients(forward, [w], h=1e-5)
print(f"\nfinite-difference max relative error: {err:.3e}")
