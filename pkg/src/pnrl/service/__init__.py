"""Asynchronous experiment service: job store, worker manager, HTTP API."""
