"""
Command-line front end: CSV ingestion, run configuration, dispatch and JSON reports.
"""
