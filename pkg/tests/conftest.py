import numpy as np
import pytest

from isoflow.models.curve import CsfSettings
from isoflow.services.ambient_service import AmbientService
from isoflow.services.catalog_service import CatalogService
from isoflow.services.csf_service import CsfService
from isoflow.services.flow_service import FlowService
from isoflow.services.jacobi_service import JacobiService
from isoflow.services.verify_service import VerifyService
from isoflow.utils.config import Settings


@pytest.fixture
def settings():
    # Defaults only, independent of the caller's environment
    return Settings()


@pytest.fixture
def ambient_service(settings):
    return AmbientService(settings)


@pytest.fixture
def jacobi_service(settings):
    return JacobiService(settings)


@pytest.fixture
def catalog_service(ambient_service, jacobi_service):
    return CatalogService(ambient_service, jacobi_service)


@pytest.fixture
def flow_service(jacobi_service, settings):
    return FlowService(jacobi_service, settings)


@pytest.fixture
def csf_service(settings):
    return CsfService(settings, CsfSettings())


@pytest.fixture
def verifier(ambient_service, jacobi_service, catalog_service, flow_service, csf_service, settings):
    return VerifyService(ambient_service, jacobi_service, catalog_service, flow_service, csf_service, settings)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
