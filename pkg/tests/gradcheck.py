"""Central finite-difference oracle for parameter gradients."""

import torch


def finite_difference_grads(model, loss_fn, eps=1e-6):
    """Numerical gradient of ``loss_fn()`` w.r.t. every parameter of ``model``."""
    grads = {}
    with torch.no_grad():
        for name, p in model.named_parameters():
            g = torch.zeros_like(p)
            flat, gflat = p.view(-1), g.view(-1)
            for i in range(flat.numel()):
                old = flat[i].item()
                flat[i] = old + eps
                up = loss_fn().item()
                flat[i] = old - eps
                down = loss_fn().item()
                flat[i] = old
                gflat[i] = (up - down) / (2 * eps)
            grads[name] = g
    return grads


def relative_error(analytic, numeric):
    denom = max(analytic.norm().item(), numeric.norm().item())
    if denom == 0:
        return 0.0
    return (analytic - numeric).norm().item() / denom
