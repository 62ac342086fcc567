#!/usr/bin/env python3
"""
Startup script for the Theta Walk Ensembles API
"""
import uvicorn

from config import settings
from main import app

if __name__ == "__main__":
    print(f"Starting {settings.PROJECT_NAME}...")
    print(f"API will be available at: http://localhost:{settings.PORT}")
    print(f"Interactive docs: http://localhost:{settings.PORT}/docs")
    print("Press Ctrl+C to stop the server")

    uvicorn.run(
        app,
        host=settings.HOST,
        port=settings.PORT,
        log_level=settings.LOG_LEVEL.lower(),
    )
