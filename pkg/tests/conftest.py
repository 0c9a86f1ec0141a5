import numpy as np
import pytest

from mrbnn import bnn, config
from mrbnn.photonics import RingClass


@pytest.fixture(scope="session")
def toolkit_config():
    return config.ToolkitConfig()


@pytest.fixture(scope="session")
def env(toolkit_config):
    return config.build_environment(toolkit_config)


@pytest.fixture(scope="session")
def designs(toolkit_config):
    return config.build_designs(toolkit_config)


@pytest.fixture(scope="session")
def multibit(designs):
    return designs[RingClass.MULTI_BIT]


@pytest.fixture(scope="session")
def toy_data(toolkit_config):
    t = toolkit_config.training
    return bnn.make_blobs(t.n_train, t.n_test, t.n_features, t.n_classes,
                          t.cluster_std, t.dataset_seed)


@pytest.fixture(scope="session")
def toy_model(toolkit_config, toy_data):
    t = toolkit_config.training
    model = bnn.make_mlp([t.n_features, *t.hidden_sizes, t.n_classes],
                         seed=t.model_seed, activation_bits=t.activation_bits)
    trained, _losses = bnn.ste_train(model, toy_data.x_train,
                                     toy_data.y_train, epochs=t.epochs,
                                     lr=t.learning_rate, seed=t.model_seed)
    return trained
