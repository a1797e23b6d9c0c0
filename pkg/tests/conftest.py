import pytest

from flightrag.datagen import generate_flights
from flightrag.flight_store import render_articles
from flightrag.retrieval import build_index


@pytest.fixture(scope="session")
def small_store():
    return generate_flights(60, seed=3)


@pytest.fixture(scope="session")
def small_articles(small_store):
    return render_articles(small_store)


@pytest.fixture(scope="session")
def small_index(small_articles):
    return build_index(small_articles)
