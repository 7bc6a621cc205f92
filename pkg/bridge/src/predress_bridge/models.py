"""Classifier backends.

A model is any object with classify(image, features) returning a
(category, confidence) pair.  The mock backend echoes the simulated truth
so pipeline plumbing can be exercised without a trained network.
"""

import importlib

CATEGORIES = ("closed", "partly_opened", "opened")


class MockModel:
    """Reads the category from features["truth"], full confidence."""

    def classify(self, image, features):
        truth = features.get("truth")
        if truth not in CATEGORIES:
            raise ValueError("mock model needs a truth feature, got %r" % (truth,))
        return truth, 1.0


def load_model(spec):
    """"mock", or "package.module:attr" naming a model or model factory."""
    if spec == "mock":
        return MockModel()
    modname, sep, attr = spec.partition(":")
    if not sep or not modname or not attr:
        raise ValueError("model spec %r is not 'mock' or 'module:attr'" % spec)
    try:
        obj = getattr(importlib.import_module(modname), attr)
    except (ImportError, AttributeError) as exc:
        raise ValueError("cannot load model %r: %s" % (spec, exc)) from exc
    if not hasattr(obj, "classify") and callable(obj):
        obj = obj()
    if not hasattr(obj, "classify"):
        raise ValueError("model %r has no classify()" % spec)
    return obj
